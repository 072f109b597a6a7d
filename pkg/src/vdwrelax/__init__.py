"""Van der Waals liquid-vapor thermodynamics, relaxation dynamics, 1D flow."""

from .thermo import EosParams, Hessian2, REDUCED_VDW, TauE, ThermoEval
from .phase_diagram import (DomeTable, EquilibriumFractions, SaturationPair,
                            build_dome, classify, equilibrium_fractions,
                            spinodal_energy, tangent_state)
from .relax_dynamics import (EquilibriumReport, Fractions, PhasicDecomposition,
                             Trajectory, detect_equilibrium, integrate,
                             jacobian, mixture_entropy, phasic_from_fractions,
                             rhs, write_trajectory_csv)
from .mixture_eos import (MixtureEval, mixture_eval, mixture_pressure,
                          mixture_temperature, sound_speed_sq)
from .euler1d import (Conserved, Grid1D, PrimState, SolverConfig,
                      cons_to_prim, convective_step, hllc_flux, prim_to_cons,
                      run, source_step, stable_dt)

__version__ = "0.1.0"

__all__ = [
    "EosParams", "Hessian2", "REDUCED_VDW", "TauE", "ThermoEval",
    "DomeTable", "EquilibriumFractions", "SaturationPair", "build_dome",
    "classify", "equilibrium_fractions", "spinodal_energy", "tangent_state",
    "EquilibriumReport", "Fractions", "PhasicDecomposition", "Trajectory",
    "detect_equilibrium", "integrate", "jacobian", "mixture_entropy",
    "phasic_from_fractions", "rhs", "write_trajectory_csv",
    "MixtureEval", "mixture_eval", "mixture_pressure", "mixture_temperature",
    "sound_speed_sq",
    "Conserved", "Grid1D", "PrimState", "SolverConfig", "cons_to_prim",
    "convective_step", "hllc_flux", "prim_to_cons", "run", "source_step",
    "stable_dt",
    "__version__",
]
