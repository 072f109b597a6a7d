"""Relaxation dynamics in fraction space.

The two-phase mixture at a frozen bulk state (tau, e) is parameterized by the
volume, mass and energy fractions r = (alpha, phi, xi) of phase 1.  The phasic
states are the algebraic images

    tau1 = alpha tau / phi,   tau2 = (1 - alpha) tau / (1 - phi),
    e1   = xi e / phi,        e2   = (1 - xi) e / (1 - phi),

and the mixture entropy S(r) = phi s(x1) + (1 - phi) s(x2) drives the gradient
flow

    d alpha / dt = alpha (1 - alpha) tau (p1/T1 - p2/T2),
    d phi   / dt = phi (1 - phi) (mu2/T2 - mu1/T1),
    d xi    / dt = xi (1 - xi) e (1/T1 - 1/T2),

whose right-hand side is the componentwise product of logistic factors with
the gradient of S.  Equilibria are either identification states r = (b, b, b)
(both phases collapse onto the bulk state) or saturation states whose phasic
pressures, temperatures and chemical potentials match.

The integrator is a one-step L-stable trapezoidal/BDF2 pair with an embedded
third-order error estimate, adaptive steps, and domain protection that keeps
r inside the open unit cube and the phasic states inside the entropy domain.
"""

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import NoConvergence, PhasicOutOfDomain, StepSizeUnderflow
from .thermo import DOMAIN_MARGIN, TauE, entropy, entropy_hessian, evaluate
from .phase_diagram import concave_hull_entropy


class Fractions(NamedTuple):
    alpha: float
    phi: float
    xi: float


class PhasicDecomposition(NamedTuple):
    x1: TauE
    x2: TauE
    phi: float


class EquilibriumReport(NamedTuple):
    kind: str                # "Saturation" | "Identification" | "NotConverged"
    r_final: Fractions
    residual: float          # euclidean norm of the rhs at r_final
    eigenvalues: np.ndarray  # Jacobian spectrum at r_final, ascending real part


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray    # (n,), increasing, times of accepted steps
    states: np.ndarray   # (n, 3), fractions (alpha, phi, xi) per time
    entropy: np.ndarray  # (n,), mixture entropy per time

    def fractions(self, i=-1):
        a, p, x = self.states[i]
        return Fractions(float(a), float(p), float(x))


TOL_IDENTIFICATION = 1e-4
TOL_SATURATION = 1e-5


def _drivers(params, tau, e, phase):
    """Entropy, 1/T, p/T and mu/T of one phase; scalar fast path."""
    w = params.a / tau + e
    dt = tau - params.b
    if not (dt > DOMAIN_MARGIN and w > DOMAIN_MARGIN and math.isfinite(w)):
        raise PhasicOutOfDomain(phase, tau, e)
    s = params.Cv * math.log(w) + params.R * math.log(dt) + params.s0
    inv_T = params.Cv / w
    p_T = params.R / dt - params.a * inv_T / (tau * tau)
    mu_T = p_T * tau + e * inv_T - s
    return s, inv_T, p_T, mu_T


def _check_cube(al, ph, xi):
    # the phase whose map degenerates first names the violation
    if min(al, ph, xi) <= 0.0:
        raise PhasicOutOfDomain(1, float("nan"), float("nan"))
    if max(al, ph, xi) >= 1.0:
        raise PhasicOutOfDomain(2, float("nan"), float("nan"))


def _split(params, mix, r):
    tau, e = float(mix[0]), float(mix[1])
    al, ph, xi = float(r[0]), float(r[1]), float(r[2])
    _check_cube(al, ph, xi)
    d1 = _drivers(params, al * tau / ph, xi * e / ph, 1)
    d2 = _drivers(params, (1.0 - al) * tau / (1.0 - ph), (1.0 - xi) * e / (1.0 - ph), 2)
    return tau, e, al, ph, xi, d1, d2


def phasic_from_fractions(params, mix, r):
    """Phasic states (x1, x2) carried by the fractions r at bulk state mix."""
    tau, e = float(mix[0]), float(mix[1])
    al, ph, xi = float(r[0]), float(r[1]), float(r[2])
    _check_cube(al, ph, xi)
    x1 = TauE(al * tau / ph, xi * e / ph)
    x2 = TauE((1.0 - al) * tau / (1.0 - ph), (1.0 - xi) * e / (1.0 - ph))
    _drivers(params, x1.tau, x1.e, 1)
    _drivers(params, x2.tau, x2.e, 2)
    return PhasicDecomposition(x1, x2, ph)


def mixture_entropy(params, mix, r):
    """S(r) = phi s(x1) + (1 - phi) s(x2) at the frozen bulk state."""
    _, _, _, ph, _, d1, d2 = _split(params, mix, r)
    return ph * d1[0] + (1.0 - ph) * d2[0]


def entropy_gradient(params, mix, r):
    """Closed-form gradient of the mixture entropy with respect to r."""
    tau, e, _, _, _, d1, d2 = _split(params, mix, r)
    return np.array([
        tau * (d1[2] - d2[2]),
        d2[3] - d1[3],
        e * (d1[1] - d2[1]),
    ])


def rhs(params, mix, r):
    """Right-hand side of the fraction relaxation system."""
    tau, e, al, ph, xi, d1, d2 = _split(params, mix, r)
    return np.array([
        al * (1.0 - al) * tau * (d1[2] - d2[2]),
        ph * (1.0 - ph) * (d2[3] - d1[3]),
        xi * (1.0 - xi) * e * (d1[1] - d2[1]),
    ])


def _identification_jacobian(params, mix):
    """Exact Jacobian on the identification line r = (b, b, b).

    The logistic prefactor b(1-b) cancels against the 1/(b(1-b)) scaling of
    the phasic-map derivatives, so the result does not depend on b.  Its
    middle column is minus the sum of the other two, hence det = 0.
    """
    tau, e = float(mix[0]), float(mix[1])
    H = entropy_hessian(params, mix)
    m_t = tau * H.s_tt + e * H.s_te
    m_e = tau * H.s_te + e * H.s_ee
    col1 = np.array([tau * tau * H.s_tt, -tau * m_t, e * tau * H.s_te])
    col3 = np.array([tau * e * H.s_te, -e * m_e, e * e * H.s_ee])
    return np.column_stack([col1, -(col1 + col3), col3])


def jacobian(params, mix, r):
    """Jacobian of rhs at r: closed form on the identification line, else
    fourth-order central differences with componentwise steps."""
    al, ph, xi = float(r[0]), float(r[1]), float(r[2])
    if max(abs(al - ph), abs(ph - xi), abs(al - xi)) <= 1e-9:
        return _identification_jacobian(params, mix)
    J = np.empty((3, 3))
    rr = np.array([al, ph, xi])
    for j in range(3):
        h = 1e-6 * max(1e-3, abs(rr[j]))
        ej = np.zeros(3)
        ej[j] = 1.0
        J[:, j] = (-rhs(params, mix, rr + 2 * h * ej) + 8.0 * rhs(params, mix, rr + h * ej)
                   - 8.0 * rhs(params, mix, rr - h * ej) + rhs(params, mix, rr - 2 * h * ej)) \
            / (12.0 * h)
    return J


_GAMMA = 2.0 - math.sqrt(2.0)
_D = _GAMMA / 2.0                      # diagonal coefficient of both stages
_W = math.sqrt(2.0) / 4.0              # trapezoidal weights of the BDF2 stage
_ERR_W = np.array([(math.sqrt(2.0) - 1.0) / 3.0, -1.0 / 3.0, (2.0 - math.sqrt(2.0)) / 3.0])


def _newton_stage(params, mix, const, dh, z0, M):
    """Solve z = const + dh*rhs(z) by modified Newton with the frozen matrix M."""
    z = z0.copy()
    for _ in range(12):
        F = z - const - dh * rhs(params, mix, z)
        dz = np.linalg.solve(M, -F)
        z = z + dz
        if np.linalg.norm(dz) <= 1e-12 + 1e-10 * np.linalg.norm(z):
            return z
    return None


def integrate(params, mix, r0, t_final, rtol=1e-8, atol=1e-10, max_steps=100000):
    """Integrate the relaxation system from r0 to t_final.

    One-step trapezoidal/BDF2 scheme (L-stable, second order) with an embedded
    third-order error estimate filtered through the stage matrix; adaptive
    steps with rejection when the error test fails, the fractions leave the
    open cube, a phasic state leaves the entropy domain, or the mixture
    entropy decreases by more than 10*atol.
    """
    tau, e = float(mix[0]), float(mix[1])
    y = np.array([float(r0[0]), float(r0[1]), float(r0[2])], dtype=float)
    f0 = rhs(params, mix, y)
    s0 = mixture_entropy(params, mix, y)

    times = [0.0]
    states = [y.copy()]
    entropies = [s0]

    scale0 = atol + rtol * np.abs(y)
    d1 = np.linalg.norm(f0 / scale0)
    h = min(t_final, 0.01 / d1) if d1 > 0 else min(t_final, 1e-3)
    t = 0.0
    s_prev = s0
    delta = 1e-12

    steps = 0
    while t < t_final and steps < max_steps:
        steps += 1
        h = min(h, t_final - t)
        if h < 1e-14 * max(1.0, t):
            raise StepSizeUnderflow(t, h)
        J = jacobian(params, mix, y)
        M = np.eye(3) - _D * h * J
        try:
            fy = rhs(params, mix, y)
            z1 = _newton_stage(params, mix, y + _D * h * fy, _D * h, y + _GAMMA * h * fy, M)
            if z1 is None:
                h *= 0.5
                continue
            c2 = (z1 - (1.0 - _GAMMA) ** 2 * y) / (_GAMMA * (2.0 - _GAMMA))
            y1 = _newton_stage(params, mix, c2, _D * h, z1, M)
            if y1 is None:
                h *= 0.5
                continue
            if np.any(y1 < delta) or np.any(y1 > 1.0 - delta):
                h *= 0.5
                continue
            f1 = rhs(params, mix, z1)
            f2 = rhs(params, mix, y1)
            s_new = mixture_entropy(params, mix, y1)
        except PhasicOutOfDomain:
            h *= 0.5
            continue
        err_raw = h * (_ERR_W[0] * fy + _ERR_W[1] * f1 + _ERR_W[2] * f2)
        err_vec = np.linalg.solve(M, err_raw)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y1))
        err = math.sqrt(float(np.mean((err_vec / scale) ** 2)))
        if err > 1.0:
            h *= max(0.2, min(0.9 * err ** (-1.0 / 3.0), 0.9))
            continue
        if s_new < s_prev - 10.0 * atol:
            h *= 0.5
            continue
        t += h
        y = y1
        s_prev = s_new
        times.append(t)
        states.append(y.copy())
        entropies.append(s_new)
        h *= min(5.0, max(0.2, 0.9 * (err + 1e-16) ** (-1.0 / 3.0)))
    if t < t_final:
        raise NoConvergence(f"relaxation integration exceeded {max_steps} steps at t={t:.3g}")
    return Trajectory(np.array(times), np.array(states), np.array(entropies))


def _phasic_gaps(params, mix, r):
    dec = phasic_from_fractions(params, mix, r)
    e1, e2 = evaluate(params, dec.x1), evaluate(params, dec.x2)
    return np.array([e1.p - e2.p, e1.T - e2.T, e1.mu - e2.mu])


def _polish_saturation(params, mix, r):
    """Newton-polish the endpoint onto the exact saturation root in r.

    Solves (p1-p2, T1-T2, mu1-mu2)(r) = 0 with finite-difference Jacobian and
    damped steps inside the open cube; None if it stalls or leaves the cube.
    """
    y = np.array(r, dtype=float)
    try:
        g = _phasic_gaps(params, mix, y)
    except PhasicOutOfDomain:
        return None
    for _ in range(50):
        res = float(np.max(np.abs(g)))
        if res <= 1e-12:
            return y
        J = np.empty((3, 3))
        for j in range(3):
            h = 1e-7 * max(1e-3, abs(y[j]))
            ej = np.zeros(3)
            ej[j] = h
            try:
                J[:, j] = (_phasic_gaps(params, mix, y + ej)
                           - _phasic_gaps(params, mix, y - ej)) / (2.0 * h)
            except PhasicOutOfDomain:
                return None
        try:
            step = np.linalg.solve(J, -g)
        except np.linalg.LinAlgError:
            return None
        lam = 1.0
        for _ in range(40):
            yn = y + lam * step
            if np.all(yn > 0.0) and np.all(yn < 1.0):
                try:
                    gn = _phasic_gaps(params, mix, yn)
                except PhasicOutOfDomain:
                    lam *= 0.5
                    continue
                if np.max(np.abs(gn)) < res:
                    y, g = yn, gn
                    break
            lam *= 0.5
        else:
            return None
    return None


def detect_equilibrium(params, mix, traj):
    """Classify the endpoint of a trajectory.

    Identification when the three fractions agree pairwise to 1e-4.
    Otherwise the endpoint is polished by Newton onto the exact saturation
    root; when the polish converges within a small trust distance of the
    endpoint, the report carries the converged equilibrium (its phasic p, T,
    mu gaps are at solver accuracy, far below tol_sat).  Failing that, the
    literal relative-gap test at the endpoint decides Saturation; otherwise
    NotConverged.  The Jacobian spectrum at the reported state is attached,
    sorted by ascending real part.
    """
    r = traj.fractions(-1)
    kind = "NotConverged"
    if max(abs(r.alpha - r.phi), abs(r.phi - r.xi), abs(r.alpha - r.xi)) <= TOL_IDENTIFICATION:
        kind = "Identification"
    else:
        polished = _polish_saturation(params, mix, r)
        if polished is not None and float(np.max(np.abs(polished - np.array(r)))) <= 0.02:
            kind = "Saturation"
            r = Fractions(*(float(v) for v in polished))
        else:
            dec = phasic_from_fractions(params, mix, r)
            e1, e2 = evaluate(params, dec.x1), evaluate(params, dec.x2)
            pairs = ((e1.p, e2.p), (e1.T, e2.T), (e1.mu, e2.mu))
            if all(abs(u - v) <= TOL_SATURATION * max(1.0, abs(u), abs(v)) for u, v in pairs):
                kind = "Saturation"
    F = rhs(params, mix, r)
    eig = np.linalg.eigvals(jacobian(params, mix, r))
    eig = eig[np.argsort(eig.real)]
    return EquilibriumReport(kind, r, float(np.linalg.norm(F)), eig)


def lyapunov_GS(params, dome, mix, r):
    """Distance of the mixture entropy below the concave hull at mix."""
    return concave_hull_entropy(params, dome, mix) - mixture_entropy(params, mix, r)


def lyapunov_GI(params, mix, r):
    """Distance of the mixture entropy below the bulk entropy at mix."""
    return entropy(params, mix) - mixture_entropy(params, mix, r)


def write_trajectory_csv(params, mix, traj, path, comment_lines=()):
    """Dump a trajectory with per-phase thermodynamics, one row per step."""
    cols = "t,alpha,phi,xi,tau1,e1,tau2,e2,p1,p2,T1,T2,mu1,mu2,S_mix"
    with open(path, "w") as fh:
        for line in comment_lines:
            fh.write(f"# {line}\n")
        fh.write(cols + "\n")
        for i, t in enumerate(traj.times):
            r = traj.fractions(i)
            dec = phasic_from_fractions(params, mix, r)
            v1, v2 = evaluate(params, dec.x1), evaluate(params, dec.x2)
            row = (t, r.alpha, r.phi, r.xi,
                   dec.x1.tau, dec.x1.e, dec.x2.tau, dec.x2.e,
                   v1.p, v2.p, v1.T, v2.T, v1.mu, v2.mu, traj.entropy[i])
            fh.write(",".join(format(v, ".17g") for v in row) + "\n")
