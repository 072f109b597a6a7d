"""Six-equation homogeneous relaxation model in one dimension.

Conserved variables per cell: (rho alpha, rho phi, rho xi, rho, rho u,
rho E) with E = e + u^2/2.  The convective part is the Euler system with the
out-of-equilibrium mixture pressure law; the fraction fields ride along as
contact invariants.  The scheme is a fractional-step method: an explicit
first-order HLLC finite-volume update followed by a per-cell relaxation of
the fractions toward equilibrium with classical RK4 at frozen density,
momentum and total energy.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (FractionOutOfRange, NonHyperbolicState, NonPositiveDensity,
                     NoConvergence, PhasicOutOfDomain)
from .thermo import DOMAIN_MARGIN
from .mixture_eos import mixture_pressure, mixture_temperature, sound_speed_sq


@dataclass
class Conserved:
    """Conserved fields over the interior cells (no ghosts stored)."""
    ra: np.ndarray    # rho * alpha
    rf: np.ndarray    # rho * phi
    rx: np.ndarray    # rho * xi
    rho: np.ndarray
    mom: np.ndarray   # rho * u
    ene: np.ndarray   # rho * E

    def copy(self):
        return Conserved(*(a.copy() for a in self.as_tuple()))

    def as_tuple(self):
        return (self.ra, self.rf, self.rx, self.rho, self.mom, self.ene)

    def stack(self):
        return np.stack(self.as_tuple())

    @staticmethod
    def from_stack(arr):
        return Conserved(*(np.array(arr[k]) for k in range(6)))


@dataclass(frozen=True)
class Grid1D:
    n_cells: int
    x_min: float
    x_max: float
    n_ghost: int = 2

    @property
    def dx(self):
        return (self.x_max - self.x_min) / self.n_cells

    def centers(self):
        return self.x_min + (np.arange(self.n_cells) + 0.5) * self.dx


@dataclass(frozen=True)
class PrimState:
    rho: float
    u: float
    p: float
    alpha: float
    phi: float
    xi: float


@dataclass(frozen=True)
class SolverConfig:
    n_cells: int
    x_min: float
    x_max: float
    x_discontinuity: float
    t_end: float
    cfl: float
    epsilon: float
    boundary: str = "transmissive"     # or "periodic"
    splitting: str = "godunov"         # or "strang"
    left: PrimState = None
    right: PrimState = None
    snapshot_times: tuple = ()

    def __post_init__(self):
        if not (0.0 < self.cfl <= 1.0):
            raise ValueError(f"cfl must be in (0, 1], got {self.cfl}")
        if self.epsilon <= 0.0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.boundary not in ("transmissive", "periodic"):
            raise ValueError(f"unknown boundary '{self.boundary}'")
        if self.splitting not in ("godunov", "strang"):
            raise ValueError(f"unknown splitting '{self.splitting}'")


def _first_bad(mask):
    return int(np.argmax(mask))


def _check_admissible(W):
    if np.any(W.rho <= 0.0) or not np.all(np.isfinite(W.rho)):
        i = _first_bad(~(W.rho > 0.0) | ~np.isfinite(W.rho))
        raise NonPositiveDensity(cell=i, rho=float(W.rho[i]))
    for name, arr in (("alpha", W.ra), ("phi", W.rf), ("xi", W.rx)):
        frac = arr / W.rho
        bad = (frac <= 0.0) | (frac >= 1.0) | ~np.isfinite(frac)
        if np.any(bad):
            i = _first_bad(bad)
            raise FractionOutOfRange(
                f"{name} = {float(frac[i]):.3e} outside (0, 1) in cell {i}")


def _check_phasic_domain(params, tau, e, r):
    al, ph, xi = r
    for phase, (t_, e_) in ((1, (al * tau / ph, xi * e / ph)),
                            (2, ((1.0 - al) * tau / (1.0 - ph),
                                 (1.0 - xi) * e / (1.0 - ph)))):
        w = params.a / t_ + e_
        bad = ~((t_ - params.b > DOMAIN_MARGIN) & (w > DOMAIN_MARGIN)
                & np.isfinite(w))
        if np.any(bad):
            i = _first_bad(bad)
            raise PhasicOutOfDomain(phase, float(t_[i]), float(e_[i]), cell=i)


def _primitives(params, W):
    """Per-cell primitive fields and wave data from conserved fields."""
    _check_admissible(W)
    rho = W.rho
    u = W.mom / rho
    e = W.ene / rho - 0.5 * u * u
    tau = 1.0 / rho
    r = (W.ra / rho, W.rf / rho, W.rx / rho)
    mix = (tau, e)
    _check_phasic_domain(params, tau, e, r)
    p = mixture_pressure(params, mix, r)
    c2 = sound_speed_sq(params, mix, r)
    return rho, u, e, tau, r, np.asarray(p), np.asarray(c2)


def prim_to_cons(params, rho, u, p, alpha, phi, xi):
    """Conserved fields from (rho, u, p, fractions); p inverted to e by Newton.

    The internal energy solves mixture_pressure((1/rho, e), r) = p at fixed
    fractions, starting from the single-phase inversion of the reduced EoS.
    """
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    u = np.broadcast_to(np.asarray(u, dtype=float), rho.shape).copy()
    p = np.broadcast_to(np.asarray(p, dtype=float), rho.shape).copy()
    al = np.broadcast_to(np.asarray(alpha, dtype=float), rho.shape).copy()
    ph = np.broadcast_to(np.asarray(phi, dtype=float), rho.shape).copy()
    xi = np.broadcast_to(np.asarray(xi, dtype=float), rho.shape).copy()
    if np.any(rho <= 0.0):
        i = _first_bad(rho <= 0.0)
        raise NonPositiveDensity(cell=i, rho=float(rho[i]))
    for name, f in (("alpha", al), ("phi", ph), ("xi", xi)):
        if np.any((f <= 0.0) | (f >= 1.0)):
            i = _first_bad((f <= 0.0) | (f >= 1.0))
            raise FractionOutOfRange(f"{name} = {float(f[i]):.3e} outside (0, 1)")
    tau = 1.0 / rho
    # single-phase initial guess: T = (p + a/tau^2)(tau - b)/R, e = Cv T - a/tau
    T0 = (p + params.a / tau ** 2) * (tau - params.b) / params.R
    e = params.Cv * T0 - params.a / tau
    r = (al, ph, xi)
    # feasibility floor: both phasic energies must keep e_i + a/tau_i > 0
    tau1 = al * tau / ph
    tau2 = (1.0 - al) * tau / (1.0 - ph)
    e_floor = np.maximum(-ph * params.a / (xi * tau1),
                         -(1.0 - ph) * params.a / ((1.0 - xi) * tau2))
    gap = 1e-6 * (1.0 + np.abs(e_floor))
    e = np.maximum(e, e_floor + gap)
    for _ in range(100):
        f = mixture_pressure(params, (tau, e), r) - p
        if np.all(np.abs(f) <= 1e-12 * np.maximum(1.0, np.abs(p))):
            break
        h = np.minimum(1e-7 * np.maximum(1.0, np.abs(e)),
                       0.25 * (e - e_floor))
        dpde = (mixture_pressure(params, (tau, e + h), r)
                - mixture_pressure(params, (tau, e - h), r)) / (2.0 * h)
        e_next = e - f / dpde
        # never jump past the floor; bisect toward it instead
        e = np.where(e_next > e_floor + gap, e_next, 0.5 * (e + e_floor + gap))
    else:
        raise NoConvergence("pressure-to-energy inversion did not converge")
    W = Conserved(rho * al, rho * ph, rho * xi, rho.copy(), rho * u,
                  rho * (e + 0.5 * u * u))
    return W


def cons_to_prim(params, W):
    """Primitive fields (rho, u, p, alpha, phi, xi) plus e and T per cell."""
    rho, u, e, tau, r, p, c2 = _primitives(params, W)
    T = mixture_temperature(params, (tau, e), r)
    return {"rho": rho, "u": u, "p": p, "e": e, "T": np.asarray(T),
            "alpha": r[0], "phi": r[1], "xi": r[2], "c2": c2}


def _physical_flux(W, u, p):
    st = W.stack()
    F = u * st
    F[4] += p
    F[5] += p * u
    return F


def hllc_flux(params, left, right, prim_left=None, prim_right=None):
    """HLLC flux between per-interface left/right conserved states.

    Davis wave-speed estimates; the fraction fields are passive scalars
    carried with the contact wave.  Accepts precomputed (u, p, c2) tuples to
    avoid re-deriving primitives.
    """
    if prim_left is None:
        _, uL, _, _, _, pL, c2L = _primitives(params, left)
    else:
        uL, pL, c2L = prim_left
    if prim_right is None:
        _, uR, _, _, _, pR, c2R = _primitives(params, right)
    else:
        uR, pR, c2R = prim_right
    if np.any(c2L <= 0.0):
        i = _first_bad(c2L <= 0.0)
        raise NonHyperbolicState(float(c2L[i]), cell=i)
    if np.any(c2R <= 0.0):
        i = _first_bad(c2R <= 0.0)
        raise NonHyperbolicState(float(c2R[i]), cell=i)
    cL, cR = np.sqrt(c2L), np.sqrt(c2R)
    rhoL, rhoR = left.rho, right.rho
    sL = np.minimum(uL - cL, uR - cR)
    sR = np.maximum(uL + cL, uR + cR)
    dL = rhoL * (sL - uL)
    dR = rhoR * (sR - uR)
    s_star = (pR - pL + uL * dL - uR * dR) / (dL - dR)

    WL, WR = left.stack(), right.stack()
    FL = _physical_flux(left, uL, pL)
    FR = _physical_flux(right, uR, pR)

    def star(W, rho, u, p, E, sK, d):
        fac = d / (sK - s_star)
        Ws = np.empty_like(W)
        Ws[3] = fac
        Ws[4] = fac * s_star
        Ws[5] = fac * (E + (s_star - u) * (s_star + p / d))
        for k in range(3):
            Ws[k] = fac * W[k] / rho
        return Ws

    EL = left.ene / rhoL
    ER = right.ene / rhoR
    WsL = star(WL, rhoL, uL, pL, EL, sL, dL)
    WsR = star(WR, rhoR, uR, pR, ER, sR, dR)

    F = np.where(s_star >= 0.0,
                 np.where(sL >= 0.0, FL, FL + sL * (WsL - WL)),
                 np.where(sR <= 0.0, FR, FR + sR * (WsR - WR)))
    return F


def stable_dt(params, grid, W, cfl):
    """CFL time step dt = cfl dx / max(|u| + c) over the interior cells."""
    _, u, _, _, _, _, c2 = _primitives(params, W)
    if np.any(c2 <= 0.0):
        i = _first_bad(c2 <= 0.0)
        raise NonHyperbolicState(float(c2[i]), cell=i)
    smax = float(np.max(np.abs(u) + np.sqrt(c2)))
    return cfl * grid.dx / smax


def _extend(W, n_ghost, boundary):
    mode = "edge" if boundary == "transmissive" else "wrap"
    return Conserved(*(np.pad(a, n_ghost, mode=mode) for a in W.as_tuple()))


def convective_step(params, grid, W, dt, boundary="transmissive"):
    """One conservative finite-volume update with HLLC interface fluxes."""
    g = grid.n_ghost
    We = _extend(W, g, boundary)
    rho, u, e, tau, r, p, c2 = _primitives(params, We)
    if np.any(c2 <= 0.0):
        i = _first_bad(c2 <= 0.0)
        raise NonHyperbolicState(float(c2[i]), cell=i - g)
    # interface i+1/2 between extended cells [i] and [i+1]
    sl = slice(g - 1, g + grid.n_cells)      # left cells of each interface
    sr = slice(g, g + grid.n_cells + 1)      # right cells
    left = Conserved(*(a[sl] for a in We.as_tuple()))
    right = Conserved(*(a[sr] for a in We.as_tuple()))
    F = hllc_flux(params, left, right,
                  prim_left=(u[sl], p[sl], c2[sl]),
                  prim_right=(u[sr], p[sr], c2[sr]))
    lam = dt / grid.dx
    stacked = W.stack() - lam * (F[:, 1:] - F[:, :-1])
    return Conserved.from_stack(stacked)


FRACTION_CLAMP = 1e-12


def _vector_rhs(params, tau, e, al, ph, xi):
    """Relaxation rhs over cell arrays; raises with the offending cell."""
    a, b, R, Cv = params.a, params.b, params.R, params.Cv

    def drivers(t_, e_, phase):
        w = a / t_ + e_
        dt_ = t_ - b
        bad = ~((dt_ > DOMAIN_MARGIN) & (w > DOMAIN_MARGIN) & np.isfinite(w))
        if np.any(bad):
            i = _first_bad(bad)
            raise PhasicOutOfDomain(phase, float(t_[i]), float(e_[i]), cell=i)
        inv_T = Cv / w
        p_T = R / dt_ - a * inv_T / (t_ * t_)
        s = Cv * np.log(w) + R * np.log(dt_) + params.s0
        mu_T = p_T * t_ + e_ * inv_T - s
        return inv_T, p_T, mu_T

    i1, p1, m1 = drivers(al * tau / ph, xi * e / ph, 1)
    i2, p2, m2 = drivers((1.0 - al) * tau / (1.0 - ph), (1.0 - xi) * e / (1.0 - ph), 2)
    return np.stack([
        al * (1.0 - al) * tau * (p1 - p2),
        ph * (1.0 - ph) * (m2 - m1),
        xi * (1.0 - xi) * e * (i1 - i2),
    ])


def source_step(params, W, dt, epsilon):
    """Relax the fractions toward equilibrium at frozen (rho, rho u, rho E).

    Classical RK4 on dr/dt = F(r; tau, e)/epsilon per cell, sub-stepped so the
    internal step never exceeds epsilon/10; fractions are clamped to
    [delta, 1-delta] with delta = 1e-12 after every substep.
    """
    rho = W.rho
    u = W.mom / rho
    e = W.ene / rho - 0.5 * u * u
    tau = 1.0 / rho
    r = np.stack([W.ra / rho, W.rf / rho, W.rx / rho])
    n_sub = max(1, int(math.ceil(dt / (epsilon / 10.0))))
    h = dt / n_sub
    lo, hi = FRACTION_CLAMP, 1.0 - FRACTION_CLAMP

    def f(rr):
        rr = np.clip(rr, lo, hi)
        return _vector_rhs(params, tau, e, rr[0], rr[1], rr[2]) / epsilon

    for _ in range(n_sub):
        k1 = f(r)
        k2 = f(r + 0.5 * h * k1)
        k3 = f(r + 0.5 * h * k2)
        k4 = f(r + h * k3)
        r = np.clip(r + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4), lo, hi)
    return Conserved(rho * r[0], rho * r[1], rho * r[2],
                     W.rho, W.mom, W.ene)


def riemann_initial(params, grid, config):
    """Conserved initial data for a two-state Riemann problem."""
    x = grid.centers()
    left, right = config.left, config.right
    n = grid.n_cells
    is_left = x < config.x_discontinuity
    rho = np.where(is_left, left.rho, right.rho)
    u = np.where(is_left, left.u, right.u)
    p = np.where(is_left, left.p, right.p)
    al = np.where(is_left, left.alpha, right.alpha)
    ph = np.where(is_left, left.phi, right.phi)
    xi = np.where(is_left, left.xi, right.xi)
    return prim_to_cons(params, rho, u, p, al, ph, xi)


@dataclass
class RunResult:
    grid: Grid1D
    times: list = field(default_factory=list)        # snapshot times
    snapshots: list = field(default_factory=list)    # Conserved per snapshot
    t_final: float = 0.0
    n_steps: int = 0

    @property
    def final(self):
        return self.snapshots[-1]


def run(params, config, initial=None):
    """Fractional-step loop: convective update then fraction relaxation.

    `initial` defaults to the Riemann data of the config.  Snapshots are taken
    at the requested times (first step crossing each) and at t_end.
    """
    grid = Grid1D(config.n_cells, config.x_min, config.x_max)
    W = initial.copy() if initial is not None else riemann_initial(params, grid, config)
    t = 0.0
    pending = sorted(set(config.snapshot_times))
    result = RunResult(grid=grid)
    steps = 0
    max_steps = 10_000_000
    while t < config.t_end and steps < max_steps:
        try:
            dt = stable_dt(params, grid, W, config.cfl)
        except NonHyperbolicState as err:
            raise NonHyperbolicState(err.c2, cell=err.cell, t=t) from None
        dt = min(dt, config.t_end - t)
        try:
            if config.splitting == "strang":
                W = source_step(params, W, 0.5 * dt, config.epsilon)
                W = convective_step(params, grid, W, dt, config.boundary)
                W = source_step(params, W, 0.5 * dt, config.epsilon)
            else:
                W = convective_step(params, grid, W, dt, config.boundary)
                W = source_step(params, W, dt, config.epsilon)
        except NonHyperbolicState as err:
            raise NonHyperbolicState(err.c2, cell=err.cell, t=t) from None
        except PhasicOutOfDomain as err:
            raise PhasicOutOfDomain(err.phase, err.tau, err.e,
                                    cell=err.cell) from None
        t += dt
        steps += 1
        while pending and t >= pending[0] - 1e-14:
            result.times.append(t)
            result.snapshots.append(W.copy())
            pending.pop(0)
    if steps >= max_steps:
        raise NoConvergence(f"euler run exceeded {max_steps} steps at t={t:.3g}")
    result.times.append(t)
    result.snapshots.append(W.copy())
    result.t_final = t
    result.n_steps = steps
    return result


def parse_config(path):
    """Flat key=value solver configuration; '#' starts a comment."""
    raw = {}
    with open(path) as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, _, val = line.partition("=")
            raw[key.strip()] = val.strip()

    def take(key, conv=float):
        if key not in raw:
            raise KeyError(f"missing config key '{key}'")
        return conv(raw.pop(key))

    def state(prefix):
        return PrimState(
            rho=take(f"{prefix}_rho"), u=take(f"{prefix}_u"), p=take(f"{prefix}_p"),
            alpha=take(f"{prefix}_alpha"), phi=take(f"{prefix}_phi"),
            xi=take(f"{prefix}_xi"))

    cfg = SolverConfig(
        n_cells=take("n_cells", int),
        x_min=take("x_min"),
        x_max=take("x_max"),
        x_discontinuity=take("x_discontinuity"),
        t_end=take("t_end"),
        cfl=take("cfl"),
        epsilon=take("epsilon"),
        boundary=raw.pop("boundary", "transmissive"),
        splitting=raw.pop("splitting", "godunov"),
        left=state("left"),
        right=state("right"),
        snapshot_times=tuple(float(v) for v in raw.pop("snapshot_times", "").split(",") if v),
    )
    if raw:
        raise KeyError(f"unknown config keys: {sorted(raw)}")
    return cfg
