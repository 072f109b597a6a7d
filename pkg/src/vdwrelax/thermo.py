"""Reduced van der Waals equation of state in specific volume / internal energy.

All quantities are nondimensional. The fundamental object is the specific
entropy

    s(tau, e) = Cv*log(e + a/tau) + R*log(tau - b) + s0,

defined on D_s = {tau > b, e + a/tau > 0}. Temperature and pressure are read
off the entropy gradient (ds = p/T dtau + 1/T de):

    T = (e + a/tau)/Cv,     p = R*T/(tau - b) - a/tau**2,

and the chemical potential is always computed through the Gibbs identity
mu = p*tau + e - T*s so the identity holds by construction.

Every operation accepts scalars or numpy arrays (broadcasting) and validates
the domain with a 1e-12 margin, raising DomainError instead of returning NaN
so that Newton loops upstream can distinguish a bad step from convergence.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DomainError

DOMAIN_MARGIN = 1e-12


@dataclass(frozen=True)
class EosParams:
    """The five constants of the reduced van der Waals fluid."""

    a: float = 1.0
    b: float = 0.5
    R: float = 0.5
    Cv: float = 3.0
    s0: float = 0.0

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0 and self.R > 0 and self.Cv > 0):
            raise ValueError("EosParams requires a, b, R, Cv > 0")


#: Parameter set used throughout the reference computations.
REDUCED_VDW = EosParams()


class TauE(NamedTuple):
    tau: float
    e: float


class ThermoEval(NamedTuple):
    s: float
    T: float
    p: float
    mu: float


class Hessian2(NamedTuple):
    """Second derivatives of s; s_ee < 0 everywhere on D_s."""

    s_tt: float
    s_te: float
    s_ee: float


def _check_domain(params, tau, e):
    tau = np.asarray(tau, dtype=float)
    e = np.asarray(e, dtype=float)
    w = e + params.a / np.where(tau > 0, tau, np.nan)
    bad = ~((tau - params.b > DOMAIN_MARGIN) & (w > DOMAIN_MARGIN))
    if np.any(bad):
        tb, eb, badb = np.broadcast_arrays(tau, e, bad)
        i = int(np.argmax(np.ravel(badb)))
        raise DomainError(float(np.ravel(tb)[i]), float(np.ravel(eb)[i]))
    return tau, e, w


def entropy(params, x):
    tau, e, w = _check_domain(params, *x)
    s = params.Cv * np.log(w) + params.R * np.log(tau - params.b) + params.s0
    return s if s.ndim else float(s)


def temperature(params, x):
    _, _, w = _check_domain(params, *x)
    T = w / params.Cv
    return T if T.ndim else float(T)


def pressure(params, x):
    tau, e, w = _check_domain(params, *x)
    T = w / params.Cv
    p = params.R * T / (tau - params.b) - params.a / tau**2
    return p if p.ndim else float(p)


def chemical_potential(params, x):
    """mu = p*tau + e - T*s (Gibbs identity, exact by construction)."""
    return evaluate(params, x).mu


def evaluate(params, x):
    """All first-order quantities at once; one domain check, one log pass."""
    tau, e, w = _check_domain(params, *x)
    T = w / params.Cv
    p = params.R * T / (tau - params.b) - params.a / tau**2
    s = params.Cv * np.log(w) + params.R * np.log(tau - params.b) + params.s0
    mu = p * tau + e - T * s
    if T.ndim:
        return ThermoEval(s, T, p, mu)
    return ThermoEval(float(s), float(T), float(p), float(mu))


def entropy_hessian(params, x):
    """Closed-form second derivatives of s(tau, e).

    With w = e + a/tau = Cv*T:

        s_tt = 2a/(tau^3 T) - a^2/(Cv tau^4 T^2) - R/(tau-b)^2
        s_te = a/(Cv tau^2 T^2)
        s_ee = -1/(Cv T^2)

    These match finite differences of (p/T, 1/T); the determinant vanishes
    exactly on the spinodal curve e = g(tau).
    """
    tau, e, w = _check_domain(params, *x)
    a, b, R, Cv = params.a, params.b, params.R, params.Cv
    T = w / Cv
    s_tt = 2 * a / (tau**3 * T) - a**2 / (Cv * tau**4 * T**2) - R / (tau - b) ** 2
    s_te = a / (Cv * tau**2 * T**2)
    s_ee = -1.0 / (Cv * T**2)
    if np.asarray(s_tt).ndim:
        return Hessian2(s_tt, s_te, s_ee)
    return Hessian2(float(s_tt), float(s_te), float(s_ee))


def isotherm_pressure(params, tau, T):
    """p(tau, T) = R*T/(tau - b) - a/tau^2 along an isotherm."""
    tau = np.asarray(tau, dtype=float)
    if np.any(tau - params.b <= DOMAIN_MARGIN):
        raise DomainError(float(np.min(tau)), None, "tau <= b on isotherm")
    p = params.R * T / (tau - params.b) - params.a / tau**2
    return p if p.ndim else float(p)


def isotherm_energy(params, tau, T):
    """e(tau, T) = Cv*T - a/tau, the inverse of temperature() at fixed tau."""
    tau = np.asarray(tau, dtype=float)
    if np.any(tau - params.b <= DOMAIN_MARGIN):
        raise DomainError(float(np.min(tau)), None, "tau <= b on isotherm")
    e = params.Cv * T - params.a / tau
    return e if e.ndim else float(e)


def isotherm_dp_dtau(params, tau, T):
    """d p / d tau at fixed T; negative outside the spinodal interval."""
    tau = np.asarray(tau, dtype=float)
    if np.any(tau - params.b <= DOMAIN_MARGIN):
        raise DomainError(float(np.min(tau)), None, "tau <= b on isotherm")
    d = -params.R * T / (tau - params.b) ** 2 + 2 * params.a / tau**3
    return d if d.ndim else float(d)


def relative_entropy(params, x, y):
    """s(x) - s(y) - grad s(y) . (x - y), with grad s = (p/T, 1/T).

    Nonpositive wherever s is concave along the segment; zero between the two
    branches of a saturation pair.
    """
    sx = entropy(params, x)
    ey = evaluate(params, y)
    return sx - ey.s - (ey.p / ey.T) * (x[0] - y[0]) - (x[1] - y[1]) / ey.T


def critical_point(params):
    """Unique inflection point of the isotherms: dp/dtau = d2p/dtau2 = 0.

    For van der Waals the system closes: tau_c = 3b, T_c = 8a/(27Rb).
    Returns (tau_c, T_c, e_c, p_c) with e_c = Cv*T_c - a/tau_c.
    """
    tau_c = 3.0 * params.b
    T_c = 8.0 * params.a / (27.0 * params.R * params.b)
    e_c = params.Cv * T_c - params.a / tau_c
    p_c = isotherm_pressure(params, tau_c, T_c)
    return tau_c, T_c, e_c, p_c
