"""Experiments on the limit statements: transitions, continuum oracles,
bulk density and exact identities."""

from .continuum import (
    MMConfig,
    QuadratureError,
    continuum_Hhf,
    continuum_min,
    continuum_width,
    mm_energy,
    mm_limit_constant,
    recovery_field,
    recovery_profile,
)
from .homog import FhomEstimate, fhom_bounds, fhom_estimate, fhom_radial_check
from .identities import identity_suite
from .transition import (
    ScalingSequence,
    SweepTable,
    TransitionReport,
    liminf_lower_bound,
    regime_sweep,
    transition_energy,
)
