"""Periodic traveling waves of the generalized BBM equation and their stability indices."""

__version__ = "0.1.0"

from .errors import ConvergenceError, DomainError, WaveLabError
from .wave_family import (
    ConservedSet,
    GradientTable,
    Nonlinearity,
    TurningPoints,
    WaveParams,
    bbm,
    conserved_set,
    eval_potential,
    find_turning_points,
    gradient_table,
    mbbm,
    power_law,
    sample_profile,
)
from .evans import evans, evans_coeffs, monodromy, origin_derivatives, sign_at_infinity
from .indices import bracket2, bracket3, classify, eval_index_formula, modulational_delta, nullspace_residuals
from .spectrum import projective_roots, scan, track_branches
from .asymptotics import (
    PowerLaw,
    classify_solitary_limit,
    critical_speed,
    mass_a_ratio,
    momentum_dc_limit,
    picard_fuchs,
    scaling_map,
    sech_integral,
    solitary_limit_consistency,
)

__all__ = [
    "ConservedSet", "ConvergenceError", "DomainError", "GradientTable", "Nonlinearity", "PowerLaw",
    "TurningPoints", "WaveLabError", "WaveParams", "bbm", "bracket2", "bracket3", "classify",
    "classify_solitary_limit", "conserved_set", "critical_speed", "eval_index_formula", "eval_potential",
    "evans", "evans_coeffs", "find_turning_points", "gradient_table", "mass_a_ratio", "mbbm",
    "modulational_delta", "momentum_dc_limit", "monodromy", "nullspace_residuals", "origin_derivatives",
    "picard_fuchs", "power_law", "projective_roots", "sample_profile", "scaling_map", "scan",
    "sech_integral", "sign_at_infinity", "solitary_limit_consistency", "track_branches",
]
