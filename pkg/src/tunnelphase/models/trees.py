"""Tree ensembles: random forest, extra trees, GBDT and the second-order variant.

All four families share one grower (see ``_grower``).  Bagging families average
trees fitted on (bootstrap-weighted) targets; boosting families sum shrunken
trees fitted to the residual gradient, starting from the mean target.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from . import _grower

__all__ = ["Tree", "Ensemble", "fit_forest", "fit_boosting"]


@dataclass(frozen=True, eq=False)
class Tree:
    """Flat node arrays; ``feature == -1`` marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    count: np.ndarray
    gain: np.ndarray

    FIELDS = ("feature", "threshold", "left", "right", "value", "count", "gain")

    @property
    def n_nodes(self) -> int:
        return int(self.feature.size)

    @property
    def n_leaves(self) -> int:
        return int(np.count_nonzero(self.feature == _grower.LEAF))

    def predict(self, X) -> np.ndarray:
        return _grower.predict_tree(X, self.feature, self.threshold, self.left, self.right, self.value)

    def to_dict(self) -> dict:
        return {name: getattr(self, name).tolist() for name in self.FIELDS}

    @classmethod
    def from_dict(cls, doc: dict) -> "Tree":
        ints = {"feature", "left", "right"}
        arrays = {}
        for name in cls.FIELDS:
            dtype = np.int64 if name in ints else np.float64
            arrays[name] = np.asarray(doc[name], dtype=dtype)
        return cls(**arrays)


@dataclass(frozen=True, eq=False)
class Ensemble:
    """``base + scale * sum(tree outputs)``, or their plain mean when ``average``."""

    base: float
    scale: float
    trees: tuple
    average: bool = False

    def predict(self, X) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        if not self.trees:
            return np.full(X.shape[0], self.base)
        feature, threshold, left, right, value, offsets = self._stacked()
        return _predict_stack(X, feature, threshold, left, right, value, offsets, self.base, self.scale, self.average)

    def staged_sums(self, X):
        """Running sum of tree outputs after each tree (unscaled)."""
        total = np.zeros(X.shape[0])
        for tree in self.trees:
            total = total + tree.predict(X)
            yield total

    def _stacked(self):
        cached = self.__dict__.get("_stack")
        if cached is None:
            offsets = np.zeros(len(self.trees) + 1, dtype=np.int64)
            offsets[1:] = np.cumsum([t.n_nodes for t in self.trees])
            cat = lambda name: np.concatenate([getattr(t, name) for t in self.trees])  # noqa: E731
            cached = (cat("feature"), cat("threshold"), cat("left"), cat("right"), cat("value"), offsets)
            object.__setattr__(self, "_stack", cached)
        return cached


@njit(cache=True)
def _predict_stack(X, feature, threshold, left, right, value, offsets, base, scale, average):
    n = X.shape[0]
    out = np.empty(n)
    n_trees = offsets.size - 1
    for r in range(n):
        acc = 0.0
        for t in range(n_trees):
            off = offsets[t]
            node = 0
            while feature[off + node] != -1:
                if X[r, feature[off + node]] <= threshold[off + node]:
                    node = left[off + node]
                else:
                    node = right[off + node]
            acc += value[off + node]
        if average:
            out[r] = acc / n_trees
        else:
            out[r] = base + scale * acc
    return out


def _tree_seed(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), int(index)])


def _grow(X, presorted, g, h, active, hp, lam, min_split_gain, random_thresholds, numba_seed):
    order = _grower.active_order(presorted, active)
    arrays = _grower.grow(
        X,
        g,
        h,
        order,
        int(hp["max_depth"]),
        float(hp["min_child_weight"]),
        float(lam),
        float(min_split_gain),
        int(hp.get("max_features", X.shape[1])),
        bool(random_thresholds),
        int(numba_seed),
    )
    return Tree(*arrays)


def fit_forest(X, y, hp: dict, seed: int, extra: bool) -> Ensemble:
    """Random forest (bootstrap, best split) or extra trees (full sample, random thresholds)."""
    n = X.shape[0]
    presorted = _grower.presort(X)
    trees = []
    for t in range(int(hp["n_trees"])):
        rng = _tree_seed(seed, t)
        if extra:
            w = np.ones(n)
        else:
            w = np.bincount(rng.integers(0, n, n), minlength=n).astype(np.float64)
        tree = _grow(X, presorted, -w * y, w, w > 0, hp, 0.0, 0.0, extra, rng.integers(2**31))
        trees.append(tree)
    return Ensemble(base=0.0, scale=1.0, trees=tuple(trees), average=True)


def fit_boosting(X, y, hp: dict, seed: int, second_order: bool, X_val=None, y_val=None):
    """Stagewise squared-loss boosting; returns (Ensemble, info).

    First-order GBDT fits each tree to the residuals with mean-residual
    leaves.  The second-order variant uses leaf weights -G/(H + l2_leaf), a
    minimum split gain and hessian-based min_child_weight.  For squared loss
    the hessian is the row count, so the two coincide when both
    regularizers are zero.

    With a validation set, training stops after ``early_stopping_rounds``
    rounds without improvement and the ensemble is cut at the best round.
    """
    n = X.shape[0]
    lr = float(hp["learning_rate"])
    subsample = float(hp["subsample"])
    lam = float(hp.get("l2_leaf", 0.0)) if second_order else 0.0
    gamma = float(hp.get("min_split_gain", 0.0)) if second_order else 0.0
    patience = int(hp.get("early_stopping_rounds", 50))
    base = float(np.mean(y))
    presorted = _grower.presort(X)
    pred = np.full(n, base)
    use_val = X_val is not None and y_val is not None and len(y_val) > 0
    if use_val:
        val_pred = np.full(len(y_val), base)
        best_rmse = _rmse(y_val, val_pred)
        best_round = 0
    trees = []
    for t in range(int(hp["n_trees"])):
        rng = _tree_seed(seed, t)
        if subsample < 1.0:
            k = max(2, int(round(subsample * n)))
            active = np.zeros(n, dtype=bool)
            active[rng.choice(n, size=min(k, n), replace=False)] = True
        else:
            active = np.ones(n, dtype=bool)
        h = active.astype(np.float64)
        g = (pred - y) * h
        tree = _grow(X, presorted, g, h, active, hp, lam, gamma, False, rng.integers(2**31))
        trees.append(tree)
        pred = pred + lr * tree.predict(X)
        if use_val:
            val_pred = val_pred + lr * tree.predict(X_val)
            rmse = _rmse(y_val, val_pred)
            if rmse < best_rmse:
                best_rmse, best_round = rmse, t + 1
            elif t + 1 - best_round >= patience:
                break
    info = {"n_rounds": len(trees)}
    if use_val:
        trees = trees[:best_round]
        info.update(best_round=best_round, val_rmse=best_rmse)
    return Ensemble(base=base, scale=lr, trees=tuple(trees)), info


def _rmse(y, p) -> float:
    return math.sqrt(float(np.mean((np.asarray(y) - p) ** 2)))
