from ._shaperate import (
    __version__,
    envelope_norm,
    error_survival,
    fit_convex,
    fit_gamma,
    fit_isotonic,
    lp1_norm,
    minmax_value,
    predicted_rate_exponent,
    run_config,
    sample_errors,
)

__all__ = [
    "__version__",
    "envelope_norm",
    "error_survival",
    "fit_convex",
    "fit_gamma",
    "fit_isotonic",
    "lp1_norm",
    "minmax_value",
    "predicted_rate_exponent",
    "run_config",
    "sample_errors",
]
