"""Exact interventional Shapley values and split-gain importance.

With four features all 16 coalitions are enumerated.  For a coalition S,
v(S) is the model output averaged over background rows, with the features
in S taken from the explained row and the rest from the background row.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .dataset import FEATURES
from .errors import CapabilityError, ConsistencyError, SpecificationError
from .models import TrainedModel, predict
from .models.trees import Ensemble

__all__ = ["ShapReport", "shapley_exact", "sample_background", "gain_importance", "SHAP_HEADER", "shap_to_csv"]

SHAP_HEADER = ("row", "base_value", "phi_log10_kie", "phi_T", "phi_log10_k_tun", "phi_eta", "prediction")
DEFAULT_BACKGROUND = 256
# rows x background pairs evaluated per model call
_CHUNK = 1 << 16


@dataclass(frozen=True, eq=False)
class ShapReport:
    base_value: float
    phi: np.ndarray  # (n_rows, n_features)
    prediction: np.ndarray
    background_size: int

    def mean_abs(self) -> np.ndarray:
        return np.mean(np.abs(self.phi), axis=0)

    def ranking(self, features=FEATURES) -> list:
        """Feature names by decreasing mean |phi| (ties by feature order)."""
        m = self.mean_abs()
        return [features[i] for i in sorted(range(len(m)), key=lambda i: (-m[i], i))]


def sample_background(X, size: int = DEFAULT_BACKGROUND, seed: int = 0) -> np.ndarray:
    """Seeded sample of ``size`` rows without replacement (all rows if fewer), in row order."""
    X = np.asarray(X, dtype=float)
    if size < 1:
        raise SpecificationError("background size must be >= 1")
    if X.shape[0] <= size:
        return X.copy()
    idx = np.sort(np.random.default_rng(seed).choice(X.shape[0], size=size, replace=False))
    return X[idx]


def _coalition_weights(p):
    # w[s] = s! (p - s - 1)! / p!
    return [math.factorial(s) * math.factorial(p - s - 1) / math.factorial(p) for s in range(p)]


def shapley_exact(model: TrainedModel, rows, background) -> ShapReport:
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    background = np.atleast_2d(np.asarray(background, dtype=float))
    p = len(model.features)
    if rows.shape[1] != p or background.shape[1] != p:
        raise ConsistencyError(f"model expects {p} features, got rows {rows.shape} and background {background.shape}")
    if background.shape[0] == 0:
        raise SpecificationError("background must be nonempty")
    n, nb = rows.shape[0], background.shape[0]
    masks = range(1 << p)
    value = np.empty((1 << p, n))
    step = max(1, _CHUNK // nb)
    for mask in masks:
        take = np.array([(mask >> j) & 1 for j in range(p)], dtype=bool)
        for a in range(0, n, step):
            b = min(n, a + step)
            mix = np.broadcast_to(background, (b - a, nb, p)).copy()
            mix[:, :, take] = rows[a:b, None, take]
            out = predict(model, mix.reshape(-1, p)).reshape(b - a, nb)
            value[mask, a:b] = out.mean(axis=1)
    weights = _coalition_weights(p)
    phi = np.zeros((n, p))
    for i in range(p):
        others = [j for j in range(p) if j != i]
        for size in range(p):
            for subset in combinations(others, size):
                mask = sum(1 << j for j in subset)
                phi[:, i] += weights[size] * (value[mask | (1 << i)] - value[mask])
    base = float(value[0, 0]) if n else float(np.mean(predict(model, background)))
    return ShapReport(base_value=base, phi=phi, prediction=predict(model, rows), background_size=nb)


def gain_importance(model: TrainedModel) -> np.ndarray:
    """Total split gain per feature, normalized to sum to 1 (all zeros if no split)."""
    if not isinstance(model.payload, Ensemble):
        raise CapabilityError(f"gain importance needs a tree model, got {model.family.value}")
    p = len(model.features)
    total = np.zeros(p)
    for tree in model.payload.trees:
        internal = tree.feature >= 0
        np.add.at(total, tree.feature[internal], tree.gain[internal])
    s = total.sum()
    return total / s if s > 0 else total


def shap_to_csv(report: ShapReport, row_ids) -> str:
    lines = [",".join(SHAP_HEADER)]
    for rid, phi, pred in zip(row_ids, report.phi, report.prediction):
        vals = [repr(report.base_value)] + [repr(float(v)) for v in phi] + [repr(float(pred))]
        lines.append(f"{int(rid)}," + ",".join(vals))
    return "\n".join(lines) + "\n"
