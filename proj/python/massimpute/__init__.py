"""Mass imputation estimates of a finite-population mean from a
non-probability sample and a probability sample."""

from ._core import (
    FittedModel,
    MassImputeError,
    __version__,
    bootstrap,
    fit,
    ht_mean,
    ipw_mean,
    linearized_variance,
    mass_imputation_mean,
    predict,
    run_cli,
    simulate,
)

__all__ = [
    "FittedModel",
    "MassImputeError",
    "__version__",
    "bootstrap",
    "fit",
    "ht_mean",
    "ipw_mean",
    "linearized_variance",
    "mass_imputation_mean",
    "predict",
    "run_cli",
    "simulate",
]
