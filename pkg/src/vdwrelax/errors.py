"""Typed exceptions shared by all vdwrelax modules.

Solvers distinguish "stepped out of the admissible domain" from "failed to
converge"; both carry enough context to locate the offending state.
"""


class VdwError(Exception):
    """Base class for all vdwrelax errors."""


class DomainError(VdwError):
    """A (tau, e) state left the entropy domain (tau > b, e + a/tau > 0)."""

    def __init__(self, tau, e, msg=None):
        self.tau = tau
        self.e = e
        super().__init__(msg or f"state (tau={tau!r}, e={e!r}) outside entropy domain")


class InvalidTemperature(VdwError):
    """Temperature outside the admissible range of the requested operation."""


class NoConvergence(VdwError):
    """An iterative solve exhausted its iteration budget.

    `trace` holds per-iteration diagnostics (residual norms, iterates).
    """

    def __init__(self, msg, trace=None):
        self.trace = trace or []
        super().__init__(msg)


class NotUnderDome(VdwError):
    """equilibrium_fractions was asked about a state no dome segment contains."""


class NoDistinctRoot(VdwError):
    """tangent_state found no root other than the input state."""


class PhasicOutOfDomain(VdwError):
    """A phasic state reconstructed from fractions left the entropy domain.

    `phase` is 1 or 2; `cell` is the grid index when raised by euler1d.
    """

    def __init__(self, phase, tau, e, cell=None):
        self.phase = phase
        self.tau = tau
        self.e = e
        self.cell = cell
        loc = f" in cell {cell}" if cell is not None else ""
        super().__init__(f"phase {phase} state (tau={tau!r}, e={e!r}) left the domain{loc}")


class StepSizeUnderflow(VdwError):
    """Adaptive integrator could not find an acceptable step above h_min."""

    def __init__(self, t, h, msg=None):
        self.t = t
        self.h = h
        super().__init__(msg or f"step size underflow at t={t!r} (h={h!r})")


class NonPositiveDensity(VdwError):
    """A conservative state carries rho <= 0."""

    def __init__(self, cell=None, rho=None):
        self.cell = cell
        self.rho = rho
        loc = f" in cell {cell}" if cell is not None else ""
        super().__init__(f"non-positive density{loc}: rho={rho!r}")


class FractionOutOfRange(VdwError):
    """A fraction left (0, 1) where that is not recoverable by clamping."""


class NonHyperbolicState(VdwError):
    """Mixture sound speed squared is non-positive; convection is ill-posed.

    `cell` identifies the offending cell when raised from the grid loop.
    """

    def __init__(self, c2, cell=None, t=None):
        self.c2 = c2
        self.cell = cell
        self.t = t
        loc = f" in cell {cell}" if cell is not None else ""
        at = f" at t={t!r}" if t is not None else ""
        super().__init__(f"non-hyperbolic state{loc}{at}: c^2={c2!r}")
