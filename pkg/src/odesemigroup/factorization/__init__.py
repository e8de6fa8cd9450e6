"""Canonical form, ladder factorization and Bessel/plane-wave oracles."""

from .bessel import BesselDomainError, bessel_j, bessel_j_derivative, bessel_residual, first_zero
from .canonical import (
    TOL_CANONICAL,
    CanonicalForm,
    multiplier_positive,
    potential,
    potential_check,
    to_second_canonical,
    transformation_check,
    transformed_expressions,
    z_second_derivative_fd,
)
from .families import (
    CONSISTENCY_M,
    NOT_FACTORIZABLE,
    FactorizationVerdict,
    Family,
    LadderPair,
    canonical_from_potential,
    classify,
    classify_factorization,
    consistency_check,
    load_families,
)
from .ladder import (
    GridTooCoarse,
    RatioStats,
    SampledFunction,
    apply_ladder,
    compose,
    composition_multiple,
    multiple_error,
    ratio_spread,
)
from .planewave import (
    GRADIENT_CONVENTION,
    PlaneWaveReport,
    QuadratureError,
    jacobi_anger_coefficient,
    plane_wave,
    plane_wave_bessel_coefficients,
    plane_wave_irrep_check,
    reconstruction_error,
)

__all__ = [name for name in dir() if not name.startswith("_")]
