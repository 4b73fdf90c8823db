"""Early diabetes risk modelling toolkit (Python bindings to the C++ core)."""

from ._earlyrisk import (
    Dataset,
    EarlyriskError,
    Model,
    fit,
    load_dataset,
    lr_at,
    metrics,
    mine_rules,
    model_names,
    roc_auc,
    run,
    version,
    vote_features,
)

__version__ = version()

__all__ = [
    "Dataset",
    "EarlyriskError",
    "Model",
    "fit",
    "load_dataset",
    "lr_at",
    "metrics",
    "mine_rules",
    "model_names",
    "roc_auc",
    "run",
    "version",
    "vote_features",
]
