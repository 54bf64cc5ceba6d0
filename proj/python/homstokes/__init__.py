from ._core import (
    PreconditionError,
    SolverError,
    ValidationError,
    coefficient,
    effective_tensor,
    ellipticity,
    fit_rate,
    mms,
    run_study,
    validate_config,
)

__all__ = [
    "PreconditionError",
    "SolverError",
    "ValidationError",
    "coefficient",
    "effective_tensor",
    "ellipticity",
    "fit_rate",
    "mms",
    "run_study",
    "validate_config",
]
