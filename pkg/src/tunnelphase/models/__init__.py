"""From-scratch regressors with a shared fit / predict / serialize contract."""

from .core import (
    FORMAT_VERSION,
    Family,
    TrainedModel,
    default_hyperparameters,
    deserialize,
    fit,
    load_model,
    predict,
    resolve_hyperparameters,
    save_model,
    serialize,
)

__all__ = [
    "FORMAT_VERSION",
    "Family",
    "TrainedModel",
    "default_hyperparameters",
    "deserialize",
    "fit",
    "load_model",
    "predict",
    "resolve_hyperparameters",
    "save_model",
    "serialize",
]
