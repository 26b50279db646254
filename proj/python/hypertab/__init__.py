"""Python bindings for the HyperTab C++ library."""

from ._core import (
    MODEL_FORMAT_VERSION,
    ConfigError,
    ContractError,
    CorruptFileError,
    DataError,
    DivergenceError,
    HyperTabError,
    InconsistentModelError,
    Model,
    ModelFileError,
    Params,
    VersionMismatchError,
    balanced_accuracy,
    cross_validate,
    fit,
    load_csv,
    make_synthetic,
    mean_ranks,
    run_synthetic,
    synthetic_params,
)

__all__ = [
    "MODEL_FORMAT_VERSION",
    "ConfigError",
    "ContractError",
    "CorruptFileError",
    "DataError",
    "DivergenceError",
    "HyperTabError",
    "InconsistentModelError",
    "Model",
    "ModelFileError",
    "Params",
    "VersionMismatchError",
    "balanced_accuracy",
    "cross_validate",
    "fit",
    "load_csv",
    "make_synthetic",
    "mean_ranks",
    "run_synthetic",
    "synthetic_params",
]
