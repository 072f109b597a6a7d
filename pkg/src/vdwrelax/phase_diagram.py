"""Spinodal curve, saturation dome, zone classification, tangent states.

The dome is the locus of pairs (tau1, e1), (tau2, e2) sharing pressure,
temperature and chemical potential. At fixed T < Tc the pair is found by
bisection on the common pressure (the chemical-potential gap is monotone in
it) followed by a damped Newton polish on (tau1, tau2); a table of such pairs
on a temperature grid graded toward Tc provides the dome function g_star and
the lever-rule equilibrium fractions for states under the dome.

Zone tags are plain strings: 'Spinodal', 'MetastableLiquid',
'MetastableVapor', 'StableLiquid', 'StableVapor', 'Supercritical'.
"""

import math
from typing import NamedTuple

import numpy as np

from .errors import DomainError, InvalidTemperature, NoConvergence, NoDistinctRoot, NotUnderDome
from .thermo import (
    TauE,
    critical_point,
    entropy,
    entropy_hessian,
    evaluate,
    isotherm_dp_dtau,
    isotherm_energy,
    isotherm_pressure,
    relative_entropy,
    temperature,
)

ZONES = ("Spinodal", "MetastableLiquid", "MetastableVapor",
         "StableLiquid", "StableVapor", "Supercritical")


class SaturationPair(NamedTuple):
    """Coexisting states; x1 is the liquid (smaller tau) branch."""

    x1: TauE
    x2: TauE
    p_star: float
    T_star: float
    mu_star: float
    residual: float


def spinodal_energy(params, tau):
    """g(tau) = 2*a*Cv*(tau-b)^2/(R*tau^3) - a/tau.

    The entropy Hessian determinant vanishes exactly on e = g(tau); states
    below the curve are unstable (det > 0 with s_ee < 0).
    """
    a, b, R, Cv = params.a, params.b, params.R, params.Cv
    tau = np.asarray(tau, dtype=float)
    if np.any(tau <= b):
        raise DomainError(float(np.min(tau)), None, "tau <= b on spinodal curve")
    g = 2 * a * Cv * (tau - b) ** 2 / (R * tau**3) - a / tau
    return g if g.ndim else float(g)


def _bisect(f, lo, hi, iters=200):
    flo = f(lo)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if flo * fm <= 0:
            hi = mid
        else:
            lo, flo = mid, fm
        if hi - lo < 1e-15 * max(1.0, abs(hi)):
            break
    return 0.5 * (lo + hi)


def spinodal_taus(params, T):
    """Isotherm extrema of p: dp/dtau = 0 roots bracketing tau_c.

    Returns (tau_lo, tau_hi); p has its local minimum at tau_lo (liquid side)
    and its local maximum at tau_hi (vapor side). Only defined for T < Tc.
    """
    tau_c, T_c, _, _ = critical_point(params)
    if not (0.0 < T < T_c):
        raise InvalidTemperature(f"spinodal extrema need 0 < T < Tc, got {T}")
    f = lambda tau: isotherm_dp_dtau(params, tau, T)
    # dp/dtau -> -inf at tau -> b+, > 0 at tau_c, -> 0- at infinity
    lo = _bisect(f, params.b * (1 + 1e-12) + 1e-12, tau_c)
    hi = tau_c * 2
    while f(hi) > 0:
        hi *= 2
        if hi > 1e12:
            raise NoConvergence("no vapor-side extremum bracket")
    tau_hi = _bisect(f, tau_c, hi)
    return lo, tau_hi


def _mu_isotherm(params, tau, T):
    return isotherm_pressure(params, tau, T) * tau + isotherm_energy(params, tau, T) \
        - T * entropy(params, (tau, isotherm_energy(params, tau, T)))


def _tau_at_pressure(params, T, p_hat, lo, hi):
    """Root of p(tau, T) = p_hat inside a monotone bracket (lo, hi)."""
    f = lambda tau: isotherm_pressure(params, tau, T) - p_hat
    return _bisect(f, lo, hi)


def saturation_at_temperature(params, T, guess=None):
    """Solve p(tau1,T) = p(tau2,T), mu(tau1,T) = mu(tau2,T), tau1 < tau_c < tau2.

    Bracketing: the admissible common pressure lies between the isotherm's
    local minimum (liquid-side extremum, floored at 0) and local maximum
    (vapor side); the mu gap is monotone across that interval, so bisection
    gives a safe starting pair which a damped Newton sharpens to ~1e-13.
    `guess = (tau1, tau2)` skips the bisection (dome continuation).
    """
    tau_c, T_c, _, _ = critical_point(params)
    if not (0.0 < T < T_c):
        raise InvalidTemperature(f"saturation needs 0 < T < Tc = {T_c:.6f}, got {T}")
    sp_lo, sp_hi = spinodal_taus(params, T)

    def polish(t1, t2):
        trace = []
        for _ in range(100):
            p1 = isotherm_pressure(params, t1, T)
            p2 = isotherm_pressure(params, t2, T)
            r = np.array([p1 - p2, _mu_isotherm(params, t1, T) - _mu_isotherm(params, t2, T)])
            res = max(abs(r[0]), abs(r[1]))
            trace.append((t1, t2, res))
            if res <= 1e-12:
                return t1, t2, res, trace
            d1 = isotherm_dp_dtau(params, t1, T)
            d2 = isotherm_dp_dtau(params, t2, T)
            # d(mu)/dtau along an isotherm is tau * dp/dtau
            J = np.array([[d1, -d2], [t1 * d1, -t2 * d2]])
            try:
                step = np.linalg.solve(J, -r)
            except np.linalg.LinAlgError:
                break
            lam = 1.0
            for _ in range(60):
                n1, n2 = t1 + lam * step[0], t2 + lam * step[1]
                if params.b < n1 < sp_lo and n2 > sp_hi:
                    pn1 = isotherm_pressure(params, n1, T)
                    pn2 = isotherm_pressure(params, n2, T)
                    rn = max(abs(pn1 - pn2),
                             abs(_mu_isotherm(params, n1, T) - _mu_isotherm(params, n2, T)))
                    if rn < res:
                        t1, t2 = n1, n2
                        break
                lam *= 0.5
            else:
                break
        return None

    got = polish(*guess) if guess is not None else None
    if got is None:
        p_min = max(isotherm_pressure(params, sp_lo, T), 0.0)
        p_max = isotherm_pressure(params, sp_hi, T)
        if not p_max > p_min:
            raise NoConvergence(f"no admissible pressure window at T={T}")
        span = p_max - p_min

        def mu_gap(p_hat):
            t1 = _tau_at_pressure(params, T, p_hat, params.b * (1 + 1e-9), sp_lo)
            t2_hi = sp_hi * 2
            while isotherm_pressure(params, t2_hi, T) > p_hat:
                t2_hi *= 2
            t2 = _tau_at_pressure(params, T, p_hat, sp_hi, t2_hi)
            return _mu_isotherm(params, t1, T) - _mu_isotherm(params, t2, T), t1, t2

        lo_p, hi_p = p_min + 1e-12 * span, p_max - 1e-12 * span
        glo = mu_gap(lo_p)[0]
        t1 = t2 = None
        for _ in range(200):
            mid = 0.5 * (lo_p + hi_p)
            gm, t1, t2 = mu_gap(mid)
            if glo * gm <= 0:
                hi_p = mid
            else:
                lo_p, glo = mid, gm
            if hi_p - lo_p < 1e-15 * max(1.0, hi_p):
                break
        got = polish(t1, t2)
        if got is None:
            raise NoConvergence(f"saturation Newton stalled at T={T}")
    t1, t2, res, trace = got
    if res > 1e-10:
        raise NoConvergence(f"saturation residual {res:.2e} > 1e-10 at T={T}", trace)
    e1 = isotherm_energy(params, t1, T)
    e2 = isotherm_energy(params, t2, T)
    mu = _mu_isotherm(params, t1, T)
    return SaturationPair(TauE(t1, e1), TauE(t2, e2),
                          isotherm_pressure(params, t1, T), T, mu, res)


def _pchip_slopes(x, y):
    """Shape-preserving cubic slopes (Fritsch-Carlson weighted harmonic mean)."""
    h = np.diff(x)
    delta = np.diff(y) / h
    n = len(x)
    m = np.zeros(n)
    for i in range(1, n - 1):
        if delta[i - 1] * delta[i] > 0:
            w1 = 2 * h[i] + h[i - 1]
            w2 = h[i] + 2 * h[i - 1]
            m[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i])
    for j, k in ((0, 1), (n - 1, n - 2)):
        hs, ds = (h[0], delta[0]) if j == 0 else (h[-1], delta[-1])
        other = delta[1] if j == 0 else delta[-2]
        ho = h[1] if j == 0 else h[-2]
        if n > 2:
            mj = ((2 * hs + ho) * ds - hs * other) / (hs + ho)
        else:
            mj = ds
        if mj * ds <= 0:
            mj = 0.0
        elif abs(mj) > 3 * abs(ds):
            mj = 3 * ds
        m[j] = mj
    return m


class _Pchip:
    def __init__(self, x, y):
        order = np.argsort(x)
        self.x = np.asarray(x, dtype=float)[order]
        self.y = np.asarray(y, dtype=float)[order]
        self.m = _pchip_slopes(self.x, self.y)

    def __call__(self, xq):
        xq = np.asarray(xq, dtype=float)
        i = np.clip(np.searchsorted(self.x, xq) - 1, 0, len(self.x) - 2)
        h = self.x[i + 1] - self.x[i]
        t = (xq - self.x[i]) / h
        h00 = (1 + 2 * t) * (1 - t) ** 2
        h10 = t * (1 - t) ** 2
        h01 = t**2 * (3 - 2 * t)
        h11 = t**2 * (t - 1)
        v = h00 * self.y[i] + h10 * h * self.m[i] + h01 * self.y[i + 1] + h11 * h * self.m[i + 1]
        return v if v.ndim else float(v)


class DomeTable:
    """Saturation pairs on an ascending temperature grid, closed at Tc.

    `rows` is a list of (T, SaturationPair). Interpolators: `g_star(tau)`
    gives the dome energy per branch (outside the tabulated tau range it
    falls back to the spinodal energy, an empty metastable band), and
    `branches_at(T)` the liquid/vapor specific volumes.
    """

    def __init__(self, params, pairs):
        self.params = params
        tau_c, T_c, e_c, p_c = critical_point(params)
        self.tau_c, self.T_c, self.e_c = tau_c, T_c, e_c
        crit = SaturationPair(TauE(tau_c, e_c), TauE(tau_c, e_c), p_c, T_c,
                              evaluate(params, (tau_c, e_c)).mu, 0.0)
        pairs = sorted(list(pairs) + [crit], key=lambda s: s.T_star)
        self.rows = [(s.T_star, s) for s in pairs]
        self.T = np.array([s.T_star for s in pairs])
        self.tau1 = np.array([s.x1.tau for s in pairs])
        self.tau2 = np.array([s.x2.tau for s in pairs])
        self.e1 = np.array([s.x1.e for s in pairs])
        self.e2 = np.array([s.x2.e for s in pairs])
        self.p = np.array([s.p_star for s in pairs])
        self.mu = np.array([s.mu_star for s in pairs])
        self._liq = _Pchip(self.tau1, self.e1)
        self._vap = _Pchip(self.tau2, self.e2)
        self._tau1_of_T = _Pchip(self.T, self.tau1)
        self._tau2_of_T = _Pchip(self.T, self.tau2)
        self.tau_min = float(self.tau1[0])
        self.tau_max = float(self.tau2[0])

    def g_star(self, tau):
        tau_arr = np.asarray(tau, dtype=float)
        out = np.where(tau_arr <= self.tau_c,
                       self._liq(np.clip(tau_arr, self.tau_min, self.tau_c)),
                       self._vap(np.clip(tau_arr, self.tau_c, self.tau_max)))
        outside = (tau_arr < self.tau_min) | (tau_arr > self.tau_max)
        if np.any(outside):
            out = np.where(outside, spinodal_energy(self.params, tau_arr), out)
        return out if out.ndim else float(out)

    def branches_at(self, T):
        if not (self.T[0] <= T <= self.T_c):
            raise InvalidTemperature(f"dome covers [{self.T[0]}, {self.T_c}], got {T}")
        return float(self._tau1_of_T(T)), float(self._tau2_of_T(T))

    def nearest_row(self, T):
        return self.rows[int(np.argmin(np.abs(self.T - T)))][1]


def build_dome(params, n_samples=512, T_min=0.7):
    """Saturation pairs on T_k = Tc - (Tc - T_min)*(k/N)^2, marched upward.

    Continuation: each solved row predicts the next through the square-root
    closure of the dome gap near Tc (tau_branch - tau_c ~ sqrt(Tc - T)); the
    solver falls back to its bracketing path whenever the prediction fails.
    """
    if n_samples < 8:
        raise ValueError("n_samples must be at least 8")
    tau_c, T_c, _, _ = critical_point(params)
    grid = [T_c - (T_c - T_min) * (k / n_samples) ** 2 for k in range(n_samples, 0, -1)]
    pairs = []
    guess = None
    for idx, T in enumerate(grid):
        pair = saturation_at_temperature(params, T, guess=guess)
        pairs.append(pair)
        if idx + 1 < len(grid):
            # square-root closure of the gap predicts the next row
            scale = np.sqrt(max(T_c - grid[idx + 1], 0.0) / (T_c - T))
            guess = (tau_c - (tau_c - pair.x1.tau) * scale,
                     tau_c + (pair.x2.tau - tau_c) * scale)
    return DomeTable(params, pairs)


def classify(params, dome, x):
    """Zone tag of a state. Ties: e = g -> Spinodal, e = g_star -> Metastable."""
    tau, e = float(x[0]), float(x[1])
    temperature(params, (tau, e))  # domain check
    if e <= spinodal_energy(params, tau):
        return "Spinodal"
    if e >= isotherm_energy(params, tau, dome.T_c):
        return "Supercritical"
    if e <= dome.g_star(tau):
        return "MetastableLiquid" if tau < dome.tau_c else "MetastableVapor"
    T = temperature(params, (tau, e))
    if T < dome.T[0]:
        return "StableLiquid" if tau < dome.tau_c else "StableVapor"
    t1, t2 = dome.branches_at(min(T, dome.T_c))
    if tau <= t1:
        return "StableLiquid"
    if tau >= t2:
        return "StableVapor"
    return "StableLiquid" if tau < dome.tau_c else "StableVapor"


class EquilibriumFractions(NamedTuple):
    """Lever-rule fractions; phase 1 is the vapor (larger tau) branch.

    `complement` is the same equilibrium with the phase labels swapped.
    """

    alpha: float
    phi: float
    xi: float
    complement: tuple
    pair: SaturationPair


def equilibrium_fractions(params, dome, x):
    """Saturation pair whose tie-line contains x, and the fractions on it.

    The dome temperature is pinned by requiring that the mass fraction read
    from tau equals the one read from e; the mismatch is monotone along the
    table, so a row scan brackets it and bisection with exact saturation
    solves sharpens T* to machine precision.
    """
    tau, e = float(x[0]), float(x[1])

    def mismatch(pair):
        tL, tV = pair.x1.tau, pair.x2.tau
        eL, eV = pair.x1.e, pair.x2.e
        if abs(tV - tL) < 1e-9:
            return None
        return (tau - tL) / (tV - tL) - (e - eL) / (eV - eL)

    brackets = []
    prev = None
    for T, pair in dome.rows:
        h = mismatch(pair)
        if h is None:
            continue
        if prev is not None and prev[1] * h <= 0:
            brackets.append((prev[0], prev[1], T, h, pair))
        prev = (T, h)
    for lo, h_lo, hi, h_hi, pair in brackets:
        # Illinois false position on T, warm-starting each coexistence
        # solve from the most recent pair
        for _ in range(80):
            denom = h_hi - h_lo
            mid = hi - h_hi * (hi - lo) / denom if denom != 0.0 else 0.5 * (lo + hi)
            if not lo < mid < hi:
                mid = 0.5 * (lo + hi)
            pair = saturation_at_temperature(
                params, mid, guess=(pair.x1.tau, pair.x2.tau))
            hm = mismatch(pair)
            if hm is None or hm == 0.0:
                break
            if h_lo * hm < 0.0:
                hi, h_hi = mid, hm
                h_lo *= 0.5
            else:
                lo, h_lo = mid, hm
                h_hi *= 0.5
            if hi - lo < 4e-16 * max(1.0, hi):
                break
        tL, tV = pair.x1.tau, pair.x2.tau
        eL, eV = pair.x1.e, pair.x2.e
        phi = (tau - tL) / (tV - tL)  # mass fraction of the vapor phase
        if -1e-9 <= phi <= 1 + 1e-9:
            phi = min(max(phi, 0.0), 1.0)
            alpha = phi * tV / tau
            xi = phi * eV / e
            complement = (1.0 - alpha, 1.0 - phi, 1.0 - xi)
            return EquilibriumFractions(alpha, phi, xi, complement, pair)
    raise NotUnderDome(f"no dome tie-line contains (tau={tau}, e={e})")


def concave_hull_entropy(params, dome, x):
    """conc(s): affine interpolation of s across the tie-line under the dome,
    s itself elsewhere."""
    tau, e = float(x[0]), float(x[1])
    g_star = dome.g_star(tau)
    if e > g_star or not (dome.tau_min <= tau <= dome.tau_max):
        return entropy(params, (tau, e))
    try:
        eq = equilibrium_fractions(params, dome, x)
    except NotUnderDome:
        return entropy(params, (tau, e))
    s_vap = entropy(params, eq.pair.x2)
    s_liq = entropy(params, eq.pair.x1)
    return eq.phi * s_vap + (1.0 - eq.phi) * s_liq


def _tangent_newton(params, ex, tau, e, y0):
    """Polish a second-contact candidate by damped Newton; None if it stalls."""
    px_T, inv_Tx = ex.p / ex.T, 1.0 / ex.T
    mx_T = ex.mu / ex.T
    y = np.array(y0, dtype=float)

    def residual(yv):
        ev = evaluate(params, (yv[0], yv[1]))
        f1 = ev.s - ex.s - px_T * (yv[0] - tau) - inv_Tx * (yv[1] - e)
        f2 = ev.mu / ev.T - mx_T
        return np.array([f1, f2])

    r = residual(y)
    for _ in range(100):
        res = max(abs(r[0]), abs(r[1]))
        if res <= 1e-11:
            return y
        ev = evaluate(params, (y[0], y[1]))
        H = entropy_hessian(params, (y[0], y[1]))
        J = np.array([
            [ev.p / ev.T - px_T, 1.0 / ev.T - inv_Tx],
            [y[0] * H.s_tt + y[1] * H.s_te, y[0] * H.s_te + y[1] * H.s_ee],
        ])
        try:
            step = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError:
            return None
        lam = 1.0
        for _ in range(60):
            yn = y + lam * step
            try:
                rn = residual(yn)
            except DomainError:
                lam *= 0.5
                continue
            if max(abs(rn[0]), abs(rn[1])) < res:
                y, r = yn, rn
                break
            lam *= 0.5
        else:
            return None
    return None


def _is_trivial_contact(y, tau, e):
    return math.hypot(y[0] - tau, y[1] - e) <= 1e-5 * (1.0 + math.hypot(tau, e))


def _tangent_sweep(params, ex, tau, e, side):
    """Bracket a transversal second contact of the supporting plane at x.

    Sweeps specific volumes on the requested side of the critical volume.
    On each isochore mu/T peaks at e = a/tau, so the chemical-equality locus
    has at most one energy root per monotone branch; the plane residual is
    tracked along both branches and each sign change is bisected in tau.
    """
    a = params.a
    px_T, inv_Tx = ex.p / ex.T, 1.0 / ex.T
    mx_T = ex.mu / ex.T
    tau_c = 3.0 * params.b

    def plane(tau_y, e_y):
        ev = evaluate(params, (tau_y, e_y))
        return ev.s - ex.s - px_T * (tau_y - tau) - inv_Tx * (e_y - e)

    def branch_roots(tau_y):
        # branch 0 ascends in e up to the peak at a/tau, branch 1 descends past it
        def gap(e_y):
            ev = evaluate(params, (tau_y, e_y))
            return ev.mu / ev.T - mx_T

        e_pk = a / tau_y
        if gap(e_pk) < 0.0:
            return (None, None)
        e_lo = -a / tau_y + 1e-9
        lo = _bisect(gap, e_lo, e_pk, 90) if gap(e_lo) < 0.0 else None
        hi = e_pk + max(1.0, abs(e_pk))
        for _ in range(120):
            if gap(hi) < 0.0:
                break
            hi = e_pk + 2.0 * (hi - e_pk)
        else:
            return (lo, None)
        return (lo, _bisect(gap, e_pk, hi, 90))

    if side == "vapor":
        grid = np.geomspace(tau_c * (1.0 + 1e-6), 400.0 * tau_c, 140)
    else:
        grid = np.linspace(params.b + 1e-6 * max(1.0, params.b), tau_c * (1.0 - 1e-6), 140)
    prev = [None, None]
    for tau_y in grid:
        roots = branch_roots(tau_y)
        for k in (0, 1):
            e_y = roots[k]
            if e_y is None:
                prev[k] = None
                continue
            f1 = plane(tau_y, e_y)
            if prev[k] is not None and prev[k][1] * f1 < 0.0:
                t_lo, s_lo = prev[k]
                t_hi = tau_y
                cand = None
                for _ in range(60):
                    t_mid = 0.5 * (t_lo + t_hi)
                    r_mid = branch_roots(t_mid)[k]
                    if r_mid is None:
                        break
                    cand = (t_mid, r_mid)
                    if (plane(t_mid, r_mid) <= 0.0) == (s_lo <= 0.0):
                        t_lo = t_mid
                    else:
                        t_hi = t_mid
                if cand is not None and not _is_trivial_contact(cand, tau, e):
                    return cand
            prev[k] = (tau_y, f1)
    return None


def tangent_state(params, x, side="vapor"):
    """The second contact point of the entropy's supporting plane at x.

    Solves relative_entropy(y | x) = 0 together with mu(y)/T(y) = mu(x)/T(x)
    by damped Newton. `side` selects the branch of the second contact relative
    to the critical volume ('vapor' for larger, 'liquid' for smaller). States
    on the coexistence dome map to their paired branch state; metastable and
    spinodal states have a transversal contact on the opposite branch. For
    stable states the plane supports the surface strictly and only the trivial
    root y = x exists, so NoDistinctRoot is raised.
    """
    tau, e = float(x[0]), float(x[1])
    ex = evaluate(params, (tau, e))
    _, T_c, _, _ = critical_point(params)
    if ex.T >= T_c:
        raise NoDistinctRoot(f"T(x) = {ex.T:.4f} >= Tc, entropy has no second tangent point")
    pair = saturation_at_temperature(params, ex.T)
    guess = pair.x2 if side == "vapor" else pair.x1
    y = _tangent_newton(params, ex, tau, e, guess)
    if y is None or _is_trivial_contact(y, tau, e):
        bracket = _tangent_sweep(params, ex, tau, e, side)
        if bracket is None:
            raise NoDistinctRoot(
                f"supporting plane at ({tau:.6g}, {e:.6g}) touches the entropy "
                f"surface only at x on the {side} side")
        y = _tangent_newton(params, ex, tau, e, bracket)
        if y is None:
            raise NoConvergence(f"tangent-state Newton stalled from bracket {bracket}")
        if _is_trivial_contact(y, tau, e):
            raise NoDistinctRoot("Newton collapsed onto the trivial root at x")
    return TauE(float(y[0]), float(y[1]))
