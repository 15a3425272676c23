"""Seeded hyperparameter search: random sampling or a Tree-structured Parzen Estimator.

TPE settings used here (not tuned to any reference implementation):

* the first ``n_startup`` (10) trials are random;
* completed trials are ranked by validation RMSE (ties by trial index; failed
  trials rank last) and the best ``ceil(gamma * n)`` form the good set,
  gamma = 0.25;
* each dimension gets an independent Gaussian-kernel density per set, in
  log space for log-scaled dimensions, truncated to the range, with
  bandwidth max(0.05 * span, 1.06 * std * n^(-1/5)) and a uniform prior
  component of weight 1/(n+1);
* 24 candidates are drawn from the good densities and the one maximizing
  sum(log l(x) - log g(x)) is evaluated.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

from ..errors import SpecificationError, TrainingError, TunnelPhaseError
from .core import PARAMS, Family, TrainedModel, fit, predict, resolve_hyperparameters

__all__ = ["Dim", "HyperSpace", "Trial", "SearchResult", "default_space", "search", "trial_log_csv", "TRIAL_HEADER"]

TRIAL_HEADER = ("trial", "family", "params_json", "val_rmse")
N_STARTUP = 10
GAMMA = 0.25
N_CANDIDATES = 24


@dataclass(frozen=True)
class Dim:
    lo: float
    hi: float
    integer: bool = False
    log: bool = False

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi) and self.lo < self.hi):
            raise SpecificationError(f"search range needs lo < hi, got [{self.lo}, {self.hi}]")
        if self.log and self.lo <= 0.0:
            raise SpecificationError("log-scaled range must be positive")

    # internal coordinates: log for log-scaled dimensions
    def to_u(self, x):
        return np.log(x) if self.log else np.asarray(x, dtype=float)

    def from_u(self, u):
        x = float(math.exp(u) if self.log else u)
        if self.integer:
            return int(min(max(math.floor(x + 0.5), self.lo), self.hi))
        return min(max(x, self.lo), self.hi)

    @property
    def u_range(self):
        if self.log:
            return (math.log(self.lo), math.log(self.hi))
        if self.integer:
            # every integer gets an equal-width cell
            return (self.lo - 0.5, self.hi + 0.5)
        return (self.lo, self.hi)

    def to_dict(self) -> dict:
        return {"lo": self.lo, "hi": self.hi, "integer": self.integer, "log": self.log}


class HyperSpace(dict):
    """Mapping hyperparameter name -> :class:`Dim`."""

    @classmethod
    def from_dict(cls, family, doc: dict) -> "HyperSpace":
        family = Family(family)
        out = cls()
        for name in sorted(doc):
            if name not in PARAMS[family]:
                raise SpecificationError(f"{name!r} is not a hyperparameter of {family.value}")
            d = doc[name]
            integer = PARAMS[family][name].kind is int
            out[name] = Dim(float(d["lo"]), float(d["hi"]), integer=integer, log=bool(d.get("log", False)))
        return out

    def to_dict(self) -> dict:
        return {name: self[name].to_dict() for name in sorted(self)}


_DEPTH = {"max_depth": {"lo": 1, "hi": 10}}
_MCW = {"min_child_weight": {"lo": 1e-3, "hi": 10.0, "log": True}}
_DEFAULT_SPACES = {
    Family.RIDGE: {"alpha": {"lo": 1e-6, "hi": 1e3, "log": True}},
    Family.PLSR: {"n_components": {"lo": 1, "hi": 4}},
    Family.RF: {**_DEPTH, **_MCW, "max_features": {"lo": 1, "hi": 4}, "n_trees": {"lo": 50, "hi": 200}},
    Family.ET: {**_DEPTH, **_MCW, "max_features": {"lo": 1, "hi": 4}, "n_trees": {"lo": 50, "hi": 200}},
    Family.GBDT: {
        **_DEPTH,
        **_MCW,
        "learning_rate": {"lo": 0.01, "hi": 1.0, "log": True},
        "n_trees": {"lo": 50, "hi": 300},
        "subsample": {"lo": 0.5, "hi": 1.0},
    },
    Family.XGB: {
        **_DEPTH,
        **_MCW,
        "learning_rate": {"lo": 0.01, "hi": 1.0, "log": True},
        "n_trees": {"lo": 50, "hi": 300},
        "subsample": {"lo": 0.5, "hi": 1.0},
        "l2_leaf": {"lo": 0.0, "hi": 10.0},
    },
}


def default_space(family) -> HyperSpace:
    family = Family(family)
    return HyperSpace.from_dict(family, _DEFAULT_SPACES[family])


def default_space_docs() -> dict:
    return {f.value: json.loads(json.dumps(_DEFAULT_SPACES[f])) for f in Family}


@dataclass
class Trial:
    index: int
    family: str
    params: dict
    val_rmse: float
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None and math.isfinite(self.val_rmse)


@dataclass
class SearchResult:
    best_params: dict
    best_index: int
    trials: list
    best_model: TrainedModel | None = field(default=None, repr=False)

    @property
    def best_rmse(self) -> float:
        return self.trials[self.best_index].val_rmse


def _rmse(y, p) -> float:
    return math.sqrt(float(np.mean((np.asarray(y, dtype=float) - p) ** 2)))


def _sample_random(space, rng) -> dict:
    out = {}
    for name in sorted(space):
        dim = space[name]
        lo, hi = dim.u_range
        out[name] = dim.from_u(rng.uniform(lo, hi))
    return out


class _Parzen:
    """Truncated Gaussian-kernel density on one dimension, with a uniform prior."""

    def __init__(self, points, lo, hi):
        self.lo, self.hi = lo, hi
        span = hi - lo
        pts = np.asarray(points, dtype=float)
        n = pts.size
        if n > 1:
            bw = max(0.05 * span, 1.06 * float(np.std(pts)) * n ** -0.2)
        else:
            bw = 0.25 * span
        self.mu = pts
        self.sigma = bw
        self.w_prior = 1.0 / (n + 1)
        self.w_kernel = (1.0 - self.w_prior) / n if n else 0.0
        self.mass = norm.cdf((hi - pts) / bw) - norm.cdf((lo - pts) / bw)

    def logpdf(self, u):
        u = np.atleast_1d(np.asarray(u, dtype=float))
        dens = np.full(u.shape, self.w_prior / (self.hi - self.lo))
        if self.mu.size:
            z = (u[:, None] - self.mu[None, :]) / self.sigma
            k = norm.pdf(z) / (self.sigma * self.mass[None, :])
            dens = dens + self.w_kernel * k.sum(axis=1)
        return np.log(dens)

    def sample(self, rng, size):
        out = np.empty(size)
        for j in range(size):
            if self.mu.size == 0 or rng.random() < self.w_prior:
                out[j] = rng.uniform(self.lo, self.hi)
                continue
            c = self.mu[rng.integers(self.mu.size)]
            for _ in range(100):
                v = rng.normal(c, self.sigma)
                if self.lo <= v <= self.hi:
                    break
            else:
                v = min(max(v, self.lo), self.hi)
            out[j] = v
        return out


def _sample_tpe(space, trials, rng) -> dict:
    ranked = sorted(trials, key=lambda t: (0 if t.ok else 1, t.val_rmse if t.ok else 0.0, t.index))
    n_good = max(1, int(math.ceil(GAMMA * len(ranked))))
    good, bad = ranked[:n_good], ranked[n_good:]
    names = sorted(space)
    cand_u = {}
    score = np.zeros(N_CANDIDATES)
    for name in names:
        dim = space[name]
        lo, hi = dim.u_range
        to_u = lambda ts: [float(dim.to_u(t.params[name])) for t in ts]  # noqa: E731
        l_est = _Parzen(to_u(good), lo, hi)
        g_est = _Parzen(to_u(bad), lo, hi)
        u = l_est.sample(rng, N_CANDIDATES)
        # evaluate on the value actually used (integers are rounded)
        u_used = np.array([float(dim.to_u(dim.from_u(v))) for v in u])
        cand_u[name] = u
        score += l_est.logpdf(u_used) - g_est.logpdf(u_used)
    best = int(np.argmax(score))
    return {name: space[name].from_u(cand_u[name][best]) for name in names}


def search(
    family,
    space: HyperSpace | None,
    train,
    validation,
    budget: int,
    strategy: str = "tpe",
    seed: int = 0,
    fixed: dict | None = None,
) -> SearchResult:
    """Minimize validation RMSE over ``space``; ``fixed`` pins the remaining hyperparameters.

    ``train`` and ``validation`` are (X, y) pairs.  Every trial fits with the
    same model seed, so trials differ only in hyperparameters.
    """
    family = Family(family)
    if isinstance(budget, bool) or not isinstance(budget, int) or budget < 1:
        raise SpecificationError(f"search budget must be a positive integer, got {budget!r}")
    if strategy not in ("random", "tpe"):
        raise SpecificationError(f"unknown search strategy {strategy!r}")
    space = default_space(family) if space is None else space
    fixed = dict(fixed or {})
    overlap = sorted(set(fixed) & set(space))
    if overlap:
        raise SpecificationError(f"hyperparameters both fixed and searched: {overlap}")
    resolve_hyperparameters(family, fixed)
    X_tr, y_tr = train
    X_va, y_va = validation
    rng = np.random.default_rng(seed)
    trials: list[Trial] = []
    best_model, best_index = None, None
    for i in range(budget):
        if strategy == "random" or i < N_STARTUP or not space:
            params = _sample_random(space, rng)
        else:
            params = _sample_tpe(space, trials, rng)
        hp = {**fixed, **params}
        try:
            model = fit(family, hp, X_tr, y_tr, seed=seed, X_val=X_va, y_val=y_va)
            rmse = _rmse(y_va, predict(model, X_va))
            if not math.isfinite(rmse):
                raise ArithmeticError("non-finite validation RMSE")
            trial = Trial(i, family.value, params, rmse)
        except (TunnelPhaseError, ArithmeticError, ValueError) as exc:
            model = None
            trial = Trial(i, family.value, params, math.nan, error=f"{type(exc).__name__}: {exc}")
        trials.append(trial)
        if trial.ok and (best_index is None or trial.val_rmse < trials[best_index].val_rmse):
            best_index, best_model = i, model
    if best_index is None:
        raise TrainingError(f"every {family.value} search trial failed; first error: {trials[0].error}")
    best = resolve_hyperparameters(family, {**fixed, **trials[best_index].params})
    return SearchResult(best_params=best, best_index=best_index, trials=trials, best_model=best_model)


def trial_log_csv(trials) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRIAL_HEADER)
    for t in trials:
        w.writerow([t.index, t.family, json.dumps(t.params, sort_keys=True), repr(float(t.val_rmse))])
    return buf.getvalue()
