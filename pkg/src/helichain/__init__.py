"""Numerical laboratory for frustrated ferro/antiferromagnetic spin chains."""

from .chirality import (
    ChiralityField,
    ProfileFit,
    angles,
    chi,
    fit_tanh,
    jump_count,
    order_parameter,
    profile_fit,
    reconstruct,
)
from .errors import DomainError, HelichainError, NumericalFailure, PreconditionError
from .minimize import (
    NO_CLAMP,
    AprioriResult,
    Clamp,
    DescentResult,
    OptimizerSettings,
    Trace,
    apriori_check,
    apriori_constant,
    brute_force_min,
    descend,
    grad_Hhf,
    hess_Hhf,
    random_increments,
)
from .spin import (
    GroundState,
    IncrementField,
    ModelParams,
    SpinChain,
    boundary_ok,
    energy_E,
    energy_Ehf,
    energy_H,
    energy_Hhf,
    ground_state,
    helix_angle,
    hf_offset,
    lattice_size,
    min_energy_analytic,
    reduced_Hhf,
    reflect,
    rotate,
)

__version__ = "0.1.0"
