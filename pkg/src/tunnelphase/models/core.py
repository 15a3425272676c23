"""Common fit / predict / serialize contract over the six regressor families."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from numbers import Integral, Real

import numpy as np

from ..dataset import FEATURES
from ..errors import ConsistencyError, DataError, FormatError, SpecificationError, TrainingError
from .linear import LinearModel, fit_plsr, fit_ridge
from .trees import Ensemble, Tree, fit_boosting, fit_forest

__all__ = [
    "Family",
    "TrainedModel",
    "PARAMS",
    "FORMAT",
    "FORMAT_VERSION",
    "default_hyperparameters",
    "resolve_hyperparameters",
    "fit",
    "predict",
    "serialize",
    "deserialize",
    "save_model",
    "load_model",
]

FORMAT = "tunnelphase.model"
FORMAT_VERSION = "1.0"


class Family(str, Enum):
    PLSR = "plsr"
    RIDGE = "ridge"
    ET = "et"
    RF = "rf"
    GBDT = "gbdt"
    XGB = "xgb"

    @property
    def is_tree(self) -> bool:
        return self not in (Family.PLSR, Family.RIDGE)

    @property
    def is_boosted(self) -> bool:
        return self in (Family.GBDT, Family.XGB)


@dataclass(frozen=True)
class Param:
    kind: type  # int or float
    default: float
    lo: float
    hi: float
    lo_open: bool = False

    def check(self, name, value):
        if isinstance(value, bool):
            raise SpecificationError(f"{name}: expected a number, got {value!r}")
        if self.kind is int:
            if not isinstance(value, Integral):
                raise SpecificationError(f"{name}: expected an integer, got {value!r}")
            value = int(value)
        else:
            if not isinstance(value, Real) or not math.isfinite(value):
                raise SpecificationError(f"{name}: expected a finite number, got {value!r}")
            value = float(value)
        below = value <= self.lo if self.lo_open else value < self.lo
        if below or value > self.hi:
            bracket = "(" if self.lo_open else "["
            raise SpecificationError(f"{name} = {value!r} outside {bracket}{self.lo}, {self.hi}]")
        return value


_TREE = {
    "max_depth": Param(int, 6, 1, 24),
    "min_child_weight": Param(float, 1.0, 0.0, math.inf),
}
_FOREST = {
    "n_trees": Param(int, 100, 1, 2000),
    "max_features": Param(int, 2, 1, len(FEATURES)),
}
_BOOST = {
    "n_trees": Param(int, 300, 0, 2000),
    "learning_rate": Param(float, 0.1, 0.0, 1.0, lo_open=True),
    "subsample": Param(float, 1.0, 0.0, 1.0, lo_open=True),
    "early_stopping_rounds": Param(int, 50, 1, 2000),
}

PARAMS = {
    Family.RIDGE: {"alpha": Param(float, 1.0, 0.0, math.inf)},
    Family.PLSR: {"n_components": Param(int, 2, 1, len(FEATURES))},
    Family.RF: {**_TREE, **_FOREST, "max_depth": Param(int, 12, 1, 24)},
    Family.ET: {**_TREE, **_FOREST, "max_depth": Param(int, 12, 1, 24), "max_features": Param(int, 4, 1, len(FEATURES))},
    Family.GBDT: {**_TREE, **_BOOST, "max_depth": Param(int, 4, 1, 24)},
    Family.XGB: {
        **_TREE,
        **_BOOST,
        "l2_leaf": Param(float, 1.0, 0.0, math.inf),
        "min_split_gain": Param(float, 0.0, 0.0, math.inf),
    },
}


def default_hyperparameters(family) -> dict:
    family = Family(family)
    return {name: p.default for name, p in sorted(PARAMS[family].items())}


def resolve_hyperparameters(family, hyperparameters=None) -> dict:
    """Defaults overlaid with ``hyperparameters``; unknown names or bad values raise."""
    family = Family(family)
    spec = PARAMS[family]
    given = dict(hyperparameters or {})
    unknown = sorted(set(given) - set(spec))
    if unknown:
        raise SpecificationError(f"unknown hyperparameters for {family.value}: {unknown}")
    out = {}
    for name in sorted(spec):
        out[name] = spec[name].check(name, given.get(name, spec[name].default))
    return out


@dataclass(frozen=True, eq=False)
class TrainedModel:
    family: Family
    hyperparameters: dict
    features: tuple
    payload: object  # LinearModel or Ensemble
    info: dict = field(default_factory=dict)

    def predict(self, X) -> np.ndarray:
        return predict(self, X)


def _check_matrix(X, n_cols):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != n_cols:
        raise ConsistencyError(f"expected a matrix with {n_cols} columns, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise DataError("feature matrix contains non-finite values")
    return np.ascontiguousarray(X)


def fit(family, hyperparameters, X, y, seed: int = 0, X_val=None, y_val=None) -> TrainedModel:
    """Train one model.  ``X_val``/``y_val`` enable early stopping for boosted families."""
    family = Family(family)
    hp = resolve_hyperparameters(family, hyperparameters)
    X = _check_matrix(X, len(FEATURES))
    y = np.asarray(y, dtype=np.float64).ravel()
    if X.shape[0] != y.size or y.size < 2:
        raise SpecificationError(f"need >= 2 rows with matching targets, got X {X.shape} and y {y.shape}")
    if not np.all(np.isfinite(y)):
        raise DataError("targets contain non-finite values")
    if np.ptp(y) == 0.0:
        raise TrainingError("target has zero variance")
    info = {}
    if family is Family.RIDGE:
        payload = fit_ridge(X, y, hp["alpha"])
    elif family is Family.PLSR:
        payload = fit_plsr(X, y, hp["n_components"])
    elif family in (Family.RF, Family.ET):
        payload = fit_forest(X, y, hp, seed, extra=family is Family.ET)
    else:
        if X_val is not None:
            X_val = _check_matrix(X_val, len(FEATURES))
            y_val = np.asarray(y_val, dtype=np.float64).ravel()
        payload, info = fit_boosting(X, y, hp, seed, family is Family.XGB, X_val, y_val)
    return TrainedModel(family=family, hyperparameters=hp, features=tuple(FEATURES), payload=payload, info=info)


def predict(model: TrainedModel, X, features=None) -> np.ndarray:
    if features is not None and tuple(features) != tuple(model.features):
        raise ConsistencyError(f"feature schema {tuple(features)} does not match model {model.features}")
    X = _check_matrix(X, len(model.features))
    return model.payload.predict(X)


def serialize(model: TrainedModel) -> str:
    if isinstance(model.payload, LinearModel):
        payload = {"kind": "linear", **model.payload.to_dict()}
    else:
        ens = model.payload
        payload = {
            "kind": "ensemble",
            "base": ens.base,
            "scale": ens.scale,
            "average": ens.average,
            "trees": [t.to_dict() for t in ens.trees],
        }
    doc = {
        "format": FORMAT,
        "version": FORMAT_VERSION,
        "family": model.family.value,
        "features": list(model.features),
        "hyperparameters": model.hyperparameters,
        "info": model.info,
        "payload": payload,
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n"


def _check_tree(tree: Tree, n_features: int):
    n = tree.n_nodes
    if n == 0:
        raise FormatError("empty tree")
    for name in Tree.FIELDS:
        if getattr(tree, name).shape != (n,):
            raise FormatError(f"tree field {name!r} has inconsistent length")
    idx = np.arange(n)
    internal = tree.feature != -1
    if np.any(tree.feature[internal] >= n_features) or np.any(tree.feature < -1):
        raise FormatError("tree feature index out of range")
    # children must come after their parent, which rules out cycles
    for child in (tree.left, tree.right):
        if np.any((child[internal] <= idx[internal]) | (child[internal] >= n)):
            raise FormatError("tree child index invalid")
    if not np.all(np.isfinite(tree.value)) or not np.all(np.isfinite(tree.threshold)):
        raise FormatError("tree contains non-finite values")


def deserialize(text: str) -> TrainedModel:
    try:
        doc = json.loads(text)
    except (TypeError, ValueError) as exc:
        raise FormatError(f"model document is not JSON: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("format") != FORMAT:
        raise FormatError("not a model document")
    version = str(doc.get("version", ""))
    if version.split(".")[0] != FORMAT_VERSION.split(".")[0]:
        raise FormatError(f"unsupported model format version {version!r}")
    try:
        family = Family(doc["family"])
    except (KeyError, ValueError) as exc:
        raise FormatError(f"unknown model family {doc.get('family')!r}") from exc
    try:
        features = tuple(doc["features"])
        hp = resolve_hyperparameters(family, doc["hyperparameters"])
        body = doc["payload"]
        if family.is_tree:
            if body.get("kind") != "ensemble":
                raise FormatError("payload kind does not match family")
            trees = tuple(Tree.from_dict(t) for t in body["trees"])
            for t in trees:
                _check_tree(t, len(features))
            payload = Ensemble(
                base=float(body["base"]), scale=float(body["scale"]), trees=trees, average=bool(body["average"])
            )
        else:
            if body.get("kind") != "linear":
                raise FormatError("payload kind does not match family")
            payload = LinearModel.from_dict(body)
            if payload.coef.shape != (len(features),):
                raise FormatError("coefficient count does not match feature schema")
        info = dict(doc.get("info", {}))
    except FormatError:
        raise
    except (KeyError, TypeError, ValueError, SpecificationError) as exc:
        raise FormatError(f"malformed model document: {exc}") from exc
    return TrainedModel(family=family, hyperparameters=hp, features=features, payload=payload, info=info)


def save_model(model: TrainedModel, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(serialize(model))


def load_model(path) -> TrainedModel:
    with open(path, encoding="utf-8") as fh:
        return deserialize(fh.read())
