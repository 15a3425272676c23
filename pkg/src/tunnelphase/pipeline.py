"""Pipeline stages behind the CLI.  Each stage reads and writes files in one directory."""

from __future__ import annotations

import json
import os
from pathlib import Path

import numpy as np

from . import dataset as ds
from . import explain as ex
from . import phase as ph
from .config import Config
from .errors import DataError, SpecificationError
from .eval import benchmark as run_benchmark
from .eval import metrics, plan_kfold, plan_loo
from .models import Family, load_model, predict, serialize
from .models.search import HyperSpace, default_space, search, trial_log_csv

__all__ = ["write_once", "gen", "augment", "train", "benchmark", "explain", "phase", "run_all"]


def write_once(path, text: str, force: bool = False) -> Path:
    """Write ``text`` unless the file already holds different content (then raise)."""
    path = Path(path)
    if path.exists() and not force:
        if path.read_text(encoding="utf-8") == text:
            return path
        raise DataError(f"refusing to overwrite {path} with different content (use --force)")
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    os.replace(tmp, path)
    return path


def _read(path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except FileNotFoundError as exc:
        raise DataError(f"missing input file {path}") from exc


def _kappa_mode(cfg: Config) -> str:
    return cfg.doc["dataset"].get("kappa_mode", "wkb")


def load_records(out):
    return ds.dataset_from_csv(_read(Path(out) / "dataset.csv"))


def gen(cfg: Config, out, force=False) -> dict:
    """catalog.json + raw_curves.csv on the raw grid."""
    g = cfg.doc["grid"]
    catalog = ds.build_catalog(cfg.catalog_config(), cfg.doc["seed"])
    grid = ds.temperature_grid(g["t_min"], g["t_max"], g["raw_step"])
    rows = ds.sweep(catalog, grid, _kappa_mode(cfg))
    write_once(Path(out) / "catalog.json", ds.catalog_to_json(catalog), force)
    write_once(Path(out) / "raw_curves.csv", ds.raw_to_csv(rows), force)
    return {"systems": len(catalog), "raw_rows": len(rows)}


def augment(cfg: Config, out, force=False) -> dict:
    """fits.csv from the raw curves, then dataset.csv on the dense grid."""
    g = cfg.doc["grid"]
    catalog = ds.catalog_from_json(_read(Path(out) / "catalog.json"))
    rows = ds.raw_from_csv(_read(Path(out) / "raw_curves.csv"))
    window = tuple(g["fit_window"])
    fits = ds.fit_curves(rows, window)
    write_once(Path(out) / "fits.csv", ds.fits_to_csv(fits, window), force)
    if cfg.doc["dataset"]["mode"] == "arrhenius":
        dense = ds.augment(fits, g["t_min"], g["t_max"], g["augment_step"])
    else:
        grid = ds.temperature_grid(g["t_min"], g["t_max"], g["augment_step"])
        dense = ds.dense_direct(catalog, grid, _kappa_mode(cfg))
    records = ds.assemble(dense, catalog)
    write_once(Path(out) / "dataset.csv", ds.dataset_to_csv(records), force)
    worst = max(f.residual_rmse for f in fits.values())
    return {"records": len(records), "fits": len(fits), "max_residual_rmse": worst}


def _plans(cfg: Config, groups, kind=None):
    s = cfg.doc["split"]
    seed = cfg.doc["seed"]
    plans = []
    if kind in (None, "kfold"):
        plans += plan_kfold(groups, s["kfold"], s["test_fraction"], seed)
    if kind == "loo" or (kind is None and s["loo"]):
        plans += plan_loo(groups, seed)
    return plans


def _space(cfg: Config, family: Family):
    doc = cfg.doc["model"].get("spaces", {}).get(family.value)
    return default_space(family) if doc is None else HyperSpace.from_dict(family, doc)


def train(cfg: Config, out, family, plan_kind="kfold", holdout=None, force=False) -> dict:
    """Search on the first plan of a kind and keep the best trial's model.

    Writes model.json, trial_log.csv and train_report.json.
    """
    family = Family(family)
    records = load_records(out)
    X, y, groups = ds.feature_matrix(records)
    plans = _plans(cfg, groups, plan_kind)
    if plan_kind == "loo" and holdout is not None:
        plans = [p for p in plans if p.plan_id == f"loo-{holdout}"]
        if not plans:
            raise SpecificationError(f"unknown holdout system {holdout!r}")
    plan = plans[0]
    m = cfg.doc["model"]
    result = search(
        family,
        _space(cfg, family),
        (X[plan.train], y[plan.train]),
        (X[plan.validation], y[plan.validation]),
        m["budget"],
        m["strategy"],
        cfg.doc["seed"],
        fixed=m.get("fixed", {}).get(family.value),
    )
    model = result.best_model
    report = {
        "family": family.value,
        "plan_id": plan.plan_id,
        "best_params": result.best_params,
        "best_trial": result.best_index,
        "best_val_rmse": result.best_rmse,
        "train": metrics(y[plan.train], predict(model, X[plan.train])).to_dict(),
        "test": metrics(y[plan.test], predict(model, X[plan.test])).to_dict(),
    }
    write_once(Path(out) / "model.json", serialize(model), force)
    write_once(Path(out) / "trial_log.csv", trial_log_csv(result.trials), force)
    write_once(Path(out) / "train_report.json", json.dumps(report, sort_keys=True, indent=1) + "\n", force)
    return report


def benchmark(cfg: Config, out, force=False, log=None) -> dict:
    records = load_records(out)
    X, y, groups = ds.feature_matrix(records)
    plans = _plans(cfg, groups)
    m = cfg.doc["model"]
    report = run_benchmark(
        X,
        y,
        m["families"],
        plans,
        m["budget"],
        m["strategy"],
        cfg.doc["seed"],
        spaces=m.get("spaces"),
        fixed=m.get("fixed"),
        log=log,
    )
    write_once(Path(out) / "bench.json", report.to_json(), force)
    write_once(Path(out) / "deviations.csv", report.deviations_csv(), force)
    return report.summary


def explain(cfg: Config, out, model_path=None, force=False) -> dict:
    """shap.csv for a seeded sample of dataset rows, background from the first k-fold training set."""
    e = cfg.doc["explain"]
    seed = cfg.doc["seed"]
    model_path = Path(model_path) if model_path else Path(out) / "model.json"
    model = load_model(model_path)
    records = load_records(out)
    X, _, groups = ds.feature_matrix(records)
    plan = _plans(cfg, groups, "kfold")[0]
    background = ex.sample_background(X[plan.train], e["background"], seed)
    rng = np.random.default_rng([seed, 1])
    n_rows = min(e["n_rows"], X.shape[0])
    rows = np.sort(rng.choice(X.shape[0], size=n_rows, replace=False))
    rep = ex.shapley_exact(model, X[rows], background)
    write_once(Path(out) / "shap.csv", ex.shap_to_csv(rep, rows), force)
    ranking = rep.ranking()
    summary = {
        "family": model.family.value,
        "background_size": rep.background_size,
        "n_rows": int(n_rows),
        "base_value": rep.base_value,
        "mean_abs_phi": dict(zip(ds.FEATURES, rep.mean_abs().tolist())),
        "ranking": ranking,
        "kie_rank": ranking.index("log10_kie") + 1,
    }
    if model.family.is_tree:
        summary["gain_importance"] = dict(zip(ds.FEATURES, ex.gain_importance(model).tolist()))
    write_once(Path(out) / "shap_summary.json", json.dumps(summary, sort_keys=True, indent=1) + "\n", force)
    return summary


def phase(cfg: Config, out, force=False) -> dict:
    records = load_records(out)
    th = cfg.thresholds()
    panels = ph.build_diagram(records, cfg.doc["phase"]["panels"], th)
    write_once(Path(out) / "phase.csv", ph.phase_to_csv(panels), force)
    for name, svg in ph.render_svg(panels, th).items():
        write_once(Path(out) / name, svg, force)
    summ = ph.summary(panels)
    write_once(Path(out) / "phase_summary.json", json.dumps(summ, sort_keys=True, indent=1) + "\n", force)
    return {"panels": summ}


def run_all(cfg: Config, out, force=False, log=None) -> dict:
    """gen -> augment -> benchmark -> train (explain family) -> explain -> phase."""
    result = {"gen": gen(cfg, out, force), "augment": augment(cfg, out, force)}
    result["benchmark"] = benchmark(cfg, out, force, log=log)
    result["train"] = train(cfg, out, cfg.doc["explain"]["family"], "kfold", force=force)
    result["explain"] = explain(cfg, out, force=force)
    result["phase"] = phase(cfg, out, force)
    return result
