"""Out-of-equilibrium mixture pressure, temperature and sound speed.

At frozen fractions r = (alpha, phi, xi) the mixture entropy
S(tau, e) = phi s(x1) + (1 - phi) s(x2) satisfies the extended Gibbs
relations dS/de = 1/T and dS/dtau = p/T, which define

    1/T = xi/T1 + (1 - xi)/T2,
    p/T = alpha p1/T1 + (1 - alpha) p2/T2.

The sound speed follows the entropic form c^2 = -tau^2 dp/dtau + tau^2 p
dp/de at fixed r, which reduces to a pair of quadratic forms in the phasic
entropy Hessians; it is positive whenever both phasic states sit in the
concavity region of the equation of state, and can turn negative when a
phase enters the spinodal zone (loss of hyperbolicity).

All operations accept scalars or arrays and broadcast componentwise.
"""

from typing import NamedTuple

import numpy as np

from .errors import DomainError, PhasicOutOfDomain
from .thermo import entropy_hessian, evaluate


class MixtureEval(NamedTuple):
    p_mix: object   # mixture pressure
    T_mix: object   # mixture temperature
    c_sq: object    # squared sound speed; sign exposes hyperbolicity


def _phasic_states(mix, r):
    tau, e = mix
    al, ph, xi = r
    tau = np.asarray(tau, dtype=float)
    e = np.asarray(e, dtype=float)
    al = np.asarray(al, dtype=float)
    ph = np.asarray(ph, dtype=float)
    xi = np.asarray(xi, dtype=float)
    x1 = (al * tau / ph, xi * e / ph)
    x2 = ((1.0 - al) * tau / (1.0 - ph), (1.0 - xi) * e / (1.0 - ph))
    return x1, x2


def _eval_phase(params, x, phase):
    try:
        return evaluate(params, x)
    except DomainError as err:
        raise PhasicOutOfDomain(phase, err.tau, err.e) from None


def mixture_temperature(params, mix, r):
    """Reciprocal-convex mixture temperature 1/T = xi/T1 + (1-xi)/T2."""
    x1, x2 = _phasic_states(mix, r)
    v1 = _eval_phase(params, x1, 1)
    v2 = _eval_phase(params, x2, 2)
    xi = np.asarray(r[2], dtype=float)
    T = 1.0 / (xi / v1.T + (1.0 - xi) / v2.T)
    return float(T) if np.ndim(T) == 0 else T


def mixture_pressure(params, mix, r):
    """Mixture pressure from p/T = alpha p1/T1 + (1-alpha) p2/T2."""
    x1, x2 = _phasic_states(mix, r)
    v1 = _eval_phase(params, x1, 1)
    v2 = _eval_phase(params, x2, 2)
    al = np.asarray(r[0], dtype=float)
    xi = np.asarray(r[2], dtype=float)
    inv_T = xi / v1.T + (1.0 - xi) / v2.T
    p = (al * v1.p / v1.T + (1.0 - al) * v2.p / v2.T) / inv_T
    return float(p) if np.ndim(p) == 0 else p


def sound_speed_sq(params, mix, r):
    """Squared mixture sound speed via the phasic-Hessian quadratic forms.

    -c^2/(T tau^2) = (1/phi) (-alpha, xi p) H_s1 (-alpha, xi p)^T
                   + (1/(1-phi)) (-(1-alpha), (1-xi) p) H_s2 (...)^T
    with p and T the mixture values; equals -tau^2 dp/dtau + tau^2 p dp/de
    at frozen fractions.
    """
    tau = np.asarray(mix[0], dtype=float)
    al = np.asarray(r[0], dtype=float)
    ph = np.asarray(r[1], dtype=float)
    xi = np.asarray(r[2], dtype=float)
    x1, x2 = _phasic_states(mix, r)
    v1 = _eval_phase(params, x1, 1)
    v2 = _eval_phase(params, x2, 2)
    inv_T = xi / v1.T + (1.0 - xi) / v2.T
    T = 1.0 / inv_T
    p = (al * v1.p / v1.T + (1.0 - al) * v2.p / v2.T) * T
    try:
        H1 = entropy_hessian(params, x1)
    except DomainError as err:
        raise PhasicOutOfDomain(1, err.tau, err.e) from None
    try:
        H2 = entropy_hessian(params, x2)
    except DomainError as err:
        raise PhasicOutOfDomain(2, err.tau, err.e) from None
    a1, b1 = -al, xi * p
    a2, b2 = -(1.0 - al), (1.0 - xi) * p
    q1 = a1 * a1 * H1.s_tt + 2.0 * a1 * b1 * H1.s_te + b1 * b1 * H1.s_ee
    q2 = a2 * a2 * H2.s_tt + 2.0 * a2 * b2 * H2.s_te + b2 * b2 * H2.s_ee
    c2 = -T * tau * tau * (q1 / ph + q2 / (1.0 - ph))
    return float(c2) if np.ndim(c2) == 0 else c2


def mixture_eval(params, mix, r):
    """Pressure, temperature and squared sound speed in one pass."""
    return MixtureEval(
        mixture_pressure(params, mix, r),
        mixture_temperature(params, mix, r),
        sound_speed_sq(params, mix, r),
    )
