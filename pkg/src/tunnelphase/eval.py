"""Metrics, k-fold and leave-one-system-out split plans, and the benchmark runner.

All metrics are on the log10 kappa scale.  ``dev`` is the multiplicative
deviation factor 10**rmse - 1.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import MetricError, SpecificationError
from .models import Family, predict
from .models.search import HyperSpace, default_space, search

__all__ = [
    "MetricReport",
    "SplitPlan",
    "TRAIN",
    "VALIDATION",
    "TEST",
    "metrics",
    "plan_kfold",
    "plan_loo",
    "benchmark",
    "BenchmarkReport",
    "DEVIATIONS_HEADER",
]

TRAIN, VALIDATION, TEST = 0, 1, 2
ROLE_NAMES = ("train", "validation", "test")
DEVIATIONS_HEADER = ("family", "plan_id", "row", "y_obs", "y_pred", "residual", "deviation")


@dataclass(frozen=True)
class MetricReport:
    mae: float
    mse: float
    rmse: float
    r2: float
    dev: float

    def to_dict(self) -> dict:
        return asdict(self)


def metrics(y_obs, y_pred) -> MetricReport:
    """MAE, MSE, RMSE, R^2 = 1 - SSR/SST and Dev = 10^RMSE - 1.

    Raises MetricError (with the partial report attached, r2 = nan) when
    y_obs has zero variance.
    """
    y_obs = np.asarray(y_obs, dtype=float).ravel()
    y_pred = np.asarray(y_pred, dtype=float).ravel()
    if y_obs.size == 0 or y_obs.shape != y_pred.shape:
        raise SpecificationError(f"need equal nonzero lengths, got {y_obs.size} and {y_pred.size}")
    res = y_pred - y_obs
    mae = float(np.mean(np.abs(res)))
    ssr = float(np.sum(res * res))
    mse = ssr / y_obs.size
    rmse = math.sqrt(mse)
    dev = 10.0**rmse - 1.0
    sst = float(np.sum((y_obs - y_obs.mean()) ** 2))
    if sst == 0.0:
        raise MetricError("R^2 undefined: observations have zero variance", MetricReport(mae, mse, rmse, math.nan, dev))
    return MetricReport(mae, mse, rmse, 1.0 - ssr / sst, dev)


@dataclass(frozen=True, eq=False)
class SplitPlan:
    kind: str  # "kfold" or "loo"
    plan_id: str
    roles: np.ndarray  # per-row role code

    def indices(self, role: int) -> np.ndarray:
        return np.flatnonzero(self.roles == role)

    @property
    def train(self):
        return self.indices(TRAIN)

    @property
    def validation(self):
        return self.indices(VALIDATION)

    @property
    def test(self):
        return self.indices(TEST)


def _allocate(sizes, total):
    """Integer quotas proportional to ``sizes`` summing to ``total`` (largest remainder)."""
    sizes = np.asarray(sizes, dtype=float)
    exact = total * sizes / sizes.sum()
    quota = np.floor(exact).astype(int)
    short = int(total - quota.sum())
    order = np.argsort(-(exact - quota), kind="stable")
    quota[order[:short]] += 1
    return quota


def _by_system(groups):
    groups = np.asarray(groups)
    systems = sorted(set(groups.tolist()))
    return systems, [np.flatnonzero(groups == s) for s in systems]


def plan_kfold(groups, k: int = 10, test_fraction: float = 0.10, seed: int = 0) -> list[SplitPlan]:
    """Hold out a system-stratified test set, then deal the rest into k folds.

    Shuffled rows of each system are dealt round-robin (continuing across
    systems) so every fold gets a near-equal share of every system.
    """
    groups = np.asarray(groups)
    n = groups.size
    if isinstance(k, bool) or not isinstance(k, int) or k < 2:
        raise SpecificationError(f"k must be an integer >= 2, got {k!r}")
    if not 0.0 <= test_fraction < 1.0:
        raise SpecificationError("test_fraction must lie in [0, 1)")
    n_test = int(round(test_fraction * n))
    if n - n_test < k:
        raise SpecificationError(f"{n} rows cannot fill {k} folds")
    rng = np.random.default_rng(seed)
    systems, members = _by_system(groups)
    quotas = _allocate([m.size for m in members], n_test)
    fold = np.full(n, -1)
    cursor = 0
    for rows, q in zip(members, quotas):
        rows = rng.permutation(rows)
        rest = rows[q:]
        fold[rest] = (cursor + np.arange(rest.size)) % k
        cursor += rest.size
    plans = []
    for f in range(k):
        roles = np.where(fold < 0, TEST, np.where(fold == f, VALIDATION, TRAIN)).astype(np.int8)
        plans.append(SplitPlan("kfold", f"kfold-{f:02d}", roles))
    return plans


def plan_loo(groups, seed: int = 0, ratio: int = 19) -> list[SplitPlan]:
    """One plan per system: that system is test; the rest splits train:validation = ratio:1."""
    groups = np.asarray(groups)
    systems, members = _by_system(groups)
    if len(systems) < 2:
        raise SpecificationError("leave-one-system-out needs at least two systems")
    plans = []
    for p, held in enumerate(systems):
        rng = np.random.default_rng([seed, p])
        roles = np.full(groups.size, TRAIN, dtype=np.int8)
        roles[members[p]] = TEST
        others = [m for j, m in enumerate(members) if j != p]
        n_rest = sum(m.size for m in others)
        quotas = _allocate([m.size for m in others], int(round(n_rest / (ratio + 1))))
        for rows, q in zip(others, quotas):
            roles[rng.permutation(rows)[:q]] = VALIDATION
        plans.append(SplitPlan("loo", f"loo-{held}", roles))
    return plans


@dataclass
class BenchmarkReport:
    cells: list
    summary: dict
    settings: dict
    deviations: list  # (family, plan_id, row, y_obs, y_pred)

    def to_json(self) -> str:
        doc = {"settings": self.settings, "cells": self.cells, "summary": self.summary}
        return json.dumps(doc, sort_keys=True, indent=1) + "\n"

    def deviations_csv(self) -> str:
        lines = [",".join(DEVIATIONS_HEADER)]
        for fam, pid, row, yo, yp in self.deviations:
            res = yp - yo
            lines.append(f"{fam},{pid},{row},{yo!r},{yp!r},{res!r},{10.0 ** abs(res) - 1.0!r}")
        return "\n".join(lines) + "\n"

    def mean_test_rmse(self, family, kind) -> float:
        return self.summary[Family(family).value][kind]["test_rmse_mean"]


def _summarize(cells):
    summary = {}
    for fam in sorted({c["family"] for c in cells}):
        summary[fam] = {}
        for kind in sorted({c["plan_kind"] for c in cells if c["family"] == fam}):
            sub = [c for c in cells if c["family"] == fam and c["plan_kind"] == kind]
            stats = {}
            for part in ("train", "test"):
                for m in ("mae", "rmse", "r2", "dev"):
                    vals = np.array([c[part][m] for c in sub], dtype=float)
                    stats[f"{part}_{m}_mean"] = float(np.mean(vals))
                    stats[f"{part}_{m}_std"] = float(np.std(vals))
            stats["delta_r2_mean"] = stats["train_r2_mean"] - stats["test_r2_mean"]
            stats["n_plans"] = len(sub)
            summary[fam][kind] = stats
    return summary


def _safe_metrics(y_obs, y_pred) -> dict:
    try:
        return metrics(y_obs, y_pred).to_dict()
    except MetricError as exc:
        return exc.report.to_dict()


def benchmark(
    X,
    y,
    families,
    plans,
    budget: int,
    strategy: str = "tpe",
    seed: int = 0,
    spaces: dict | None = None,
    fixed: dict | None = None,
    log=None,
) -> BenchmarkReport:
    """Search, fit and score every (family, plan) cell.

    The reported model of a cell is the best search trial: fitted on the
    plan's training rows, with early stopping on its validation rows for the
    boosted families.  Failed trials are counted in the cell record.
    """
    families = [Family(f) for f in families]
    if not families or not plans:
        raise SpecificationError("benchmark needs at least one family and one plan")
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    spaces = spaces or {}
    fixed = fixed or {}
    cells, deviations = [], []
    for fam in families:
        space = spaces.get(fam.value)
        space = default_space(fam) if space is None else HyperSpace.from_dict(fam, space)
        for plan in plans:
            tr, va, te = plan.train, plan.validation, plan.test
            result = search(
                fam,
                space,
                (X[tr], y[tr]),
                (X[va], y[va]),
                budget,
                strategy,
                seed,
                fixed=fixed.get(fam.value),
            )
            model = result.best_model
            p_tr = predict(model, X[tr])
            p_te = predict(model, X[te])
            cell = {
                "family": fam.value,
                "plan_id": plan.plan_id,
                "plan_kind": plan.kind,
                "train": _safe_metrics(y[tr], p_tr),
                "test": _safe_metrics(y[te], p_te),
                "best_params": result.best_params,
                "best_val_rmse": result.best_rmse,
                "n_trials": len(result.trials),
                "n_failed": sum(not t.ok for t in result.trials),
                "model_info": model.info,
            }
            cells.append(cell)
            deviations.extend(zip([fam.value] * te.size, [plan.plan_id] * te.size, te.tolist(), y[te].tolist(), p_te.tolist()))
            if log is not None:
                log(cell)
    settings = {"budget": budget, "strategy": strategy, "seed": seed, "families": [f.value for f in families]}
    return BenchmarkReport(cells=cells, summary=_summarize(cells), settings=settings, deviations=deviations)
