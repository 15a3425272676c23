import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tunnelphase.errors import ConsistencyError, DataError, FormatError, SpecificationError, TrainingError
from tunnelphase.models import Family, deserialize, fit, load_model, predict, save_model, serialize
from tunnelphase.models.search import HyperSpace, default_space, search, trial_log_csv

FIXTURES = Path(__file__).parent / "fixtures"
ALL = [f.value for f in Family]
SMALL_HP = {
    "ridge": {"alpha": 0.5},
    "plsr": {"n_components": 3},
    "rf": {"n_trees": 20, "max_depth": 6},
    "et": {"n_trees": 20, "max_depth": 6},
    "gbdt": {"n_trees": 40, "max_depth": 3},
    "xgb": {"n_trees": 40, "max_depth": 3},
}


def rmse(a, b):
    return float(np.sqrt(np.mean((np.asarray(a) - b) ** 2)))


def test_ridge_zero_penalty_is_ols(small_xy):
    X, y = small_xy
    m = fit("ridge", {"alpha": 0.0}, X, y)
    A = np.column_stack([np.ones(len(y)), X])
    beta = np.linalg.lstsq(A, y, rcond=None)[0]
    np.testing.assert_allclose(m.payload.raw_coef, beta[1:], rtol=1e-8, atol=1e-10)
    np.testing.assert_allclose(predict(m, X), A @ beta, rtol=1e-8, atol=1e-10)


def test_plsr_full_rank_is_ols(small_xy):
    X, y = small_xy
    pls = predict(fit("plsr", {"n_components": 4}, X, y), X)
    A = np.column_stack([np.ones(len(y)), X])
    ols = A @ np.linalg.lstsq(A, y, rcond=None)[0]
    np.testing.assert_allclose(pls, ols, rtol=1e-6, atol=1e-9)


def test_depth_one_step_function():
    x = np.linspace(0, 1, 50)
    X = np.column_stack([x, np.zeros(50), np.zeros(50), np.zeros(50)])
    y = np.where(x > 0.37, 2.0, -1.0)
    m = fit("gbdt", {"n_trees": 1, "max_depth": 1, "learning_rate": 1.0}, X, y)
    assert rmse(predict(m, X), y) <= 1e-12
    assert m.payload.trees[0].n_leaves == 2


def test_xgb_interpolates():
    rng = np.random.default_rng(1)
    X = rng.uniform(0, 1, (100, 4))
    y = np.sin(4 * X[:, 0]) + X[:, 1] * X[:, 2] - X[:, 3] ** 2
    m = fit("xgb", {"learning_rate": 1.0, "max_depth": 6, "n_trees": 200}, X, y)
    assert rmse(predict(m, X), y) <= 1e-3


def test_rf_predictions_within_range(small_xy):
    X, y = small_xy
    p = predict(fit("rf", SMALL_HP["rf"], X, y), X)
    assert p.min() >= y.min() and p.max() <= y.max()


def test_zero_trees_predicts_mean(small_xy):
    X, y = small_xy
    m = fit("gbdt", {"n_trees": 0}, X, y)
    np.testing.assert_array_equal(predict(m, X), np.full(len(y), np.mean(y)))


@pytest.mark.parametrize("family", ALL)
def test_roundtrip_and_determinism(family, small_xy, tmp_path):
    X, y = small_xy
    m1 = fit(family, SMALL_HP[family], X, y, seed=3)
    m2 = fit(family, SMALL_HP[family], X, y, seed=3)
    assert serialize(m1) == serialize(m2)
    path = tmp_path / "m.json"
    save_model(m1, path)
    back = load_model(path)
    assert np.array_equal(predict(back, X), predict(m1, X))
    assert serialize(back) == serialize(m1)
    if family in ("rf", "et"):
        other = fit(family, SMALL_HP[family], X, y, seed=4)
        assert serialize(other) != serialize(m1)


def test_roundtrip_every_node_field(small_xy):
    X, y = small_xy
    m = fit("et", SMALL_HP["et"], X, y)
    back = deserialize(serialize(m))
    for a, b in zip(m.payload.trees, back.payload.trees):
        for name in a.FIELDS:
            assert np.array_equal(getattr(a, name), getattr(b, name))


def test_fixture_documents_load():
    expected = json.loads((FIXTURES / "fixture_predictions.json").read_text())
    rows = np.array(expected["rows"])
    for name, key in (("model_v1_0.json", "xgb"), ("ridge_v1_0.json", "ridge")):
        text = (FIXTURES / name).read_text()
        m = deserialize(text)
        assert predict(m, rows).tolist() == expected[key]
        minor = deserialize(text.replace('"version":"1.0"', '"version":"1.7"'))
        assert predict(minor, rows).tolist() == expected[key]
        with pytest.raises(FormatError):
            deserialize(text.replace('"version":"1.0"', '"version":"2.0"'))


def test_deserialize_errors():
    text = (FIXTURES / "model_v1_0.json").read_text()
    with pytest.raises(FormatError):
        deserialize(text.replace('"family":"xgb"', '"family":"catboost"'))
    with pytest.raises(FormatError):
        deserialize("{not json")
    doc = json.loads(text)
    doc["payload"]["trees"][0]["left"][0] = 0
    with pytest.raises(FormatError):
        deserialize(json.dumps(doc))
    doc = json.loads(text)
    doc["payload"]["kind"] = "linear"
    with pytest.raises(FormatError):
        deserialize(json.dumps(doc))


def test_fit_errors(small_xy):
    X, y = small_xy
    with pytest.raises(TrainingError):
        fit("rf", {}, X, np.ones(len(y)))
    bad = X.copy()
    bad[3, 1] = np.nan
    with pytest.raises(DataError):
        fit("ridge", {}, bad, y)
    with pytest.raises(ConsistencyError):
        fit("ridge", {}, X[:, :3], y)
    with pytest.raises(SpecificationError):
        fit("gbdt", {"depth": 3}, X, y)
    with pytest.raises(SpecificationError):
        fit("gbdt", {"learning_rate": 0.0}, X, y)
    m = fit("ridge", {}, X, y)
    with pytest.raises(ConsistencyError):
        predict(m, X, features=("a", "b", "c", "d"))


@pytest.mark.parametrize("family", ["gbdt", "xgb"])
def test_boosting_training_rmse_nonincreasing(family, small_xy):
    X, y = small_xy
    m = fit(family, {"n_trees": 60, "max_depth": 3, "learning_rate": 0.3}, X, y)
    ens = m.payload
    errs = [rmse(ens.base + ens.scale * s, y) for s in ens.staged_sums(X)]
    assert all(b <= a + 1e-12 for a, b in zip(errs, errs[1:]))


def test_xgb_without_regularization_equals_gbdt(small_xy):
    X, y = small_xy
    common = {"n_trees": 30, "max_depth": 4, "learning_rate": 0.2, "subsample": 0.8, "min_child_weight": 2.0}
    g = fit("gbdt", common, X, y, seed=5)
    x = fit("xgb", {**common, "l2_leaf": 0.0, "min_split_gain": 0.0}, X, y, seed=5)
    assert np.array_equal(predict(g, X), predict(x, X))


def test_early_stopping_truncates(small_xy):
    X, y = small_xy
    m = fit("xgb", {"n_trees": 500, "learning_rate": 0.5, "early_stopping_rounds": 10}, X[:200], y[:200], X_val=X[200:], y_val=y[200:])
    assert m.info["n_rounds"] < 500
    assert len(m.payload.trees) == m.info["best_round"]


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 1000), depth=st.integers(2, 8), mcw=st.floats(0.5, 20.0), factor=st.floats(1.0, 5.0))
def test_min_child_weight_never_adds_leaves(seed, depth, mcw, factor):
    rng = np.random.default_rng(seed)
    X = rng.uniform(0, 1, (120, 4))
    y = np.sin(5 * X[:, 0]) + X[:, 1] + 0.2 * rng.normal(size=120)
    hp = {"n_trees": 1, "max_depth": depth, "learning_rate": 1.0}
    lo = fit("xgb", {**hp, "min_child_weight": mcw}, X, y).payload.trees[0]
    hi = fit("xgb", {**hp, "min_child_weight": mcw * factor}, X, y).payload.trees[0]
    assert hi.n_leaves <= lo.n_leaves


def test_search_basics(small_xy):
    X, y = small_xy
    train, val = (X[:200], y[:200]), (X[200:], y[200:])
    one = search("ridge", None, train, val, budget=1, seed=2)
    assert len(one.trials) == 1 and one.best_index == 0
    a = search("gbdt", None, train, val, budget=14, strategy="tpe", seed=2)
    b = search("gbdt", None, train, val, budget=14, strategy="tpe", seed=2)
    assert trial_log_csv(a.trials) == trial_log_csv(b.trials)
    assert trial_log_csv(a.trials).splitlines()[0] == "trial,family,params_json,val_rmse"
    best = min(t.val_rmse for t in a.trials)
    assert a.best_rmse == best
    assert a.best_index == min(t.index for t in a.trials if t.val_rmse == best)
    assert rmse(predict(a.best_model, val[0]), val[1]) == pytest.approx(best, rel=1e-12)
    with pytest.raises(SpecificationError):
        search("ridge", None, train, val, budget=0)
    with pytest.raises(SpecificationError):
        search("ridge", None, train, val, budget=2, strategy="grid")


def test_search_space_validation():
    with pytest.raises(SpecificationError):
        HyperSpace.from_dict("xgb", {"depth": {"lo": 1, "hi": 3}})
    with pytest.raises(SpecificationError):
        HyperSpace.from_dict("xgb", {"max_depth": {"lo": 5, "hi": 3}})
    space = default_space("xgb")
    assert space["max_depth"].lo == 1 and space["max_depth"].hi == 10
    assert space["min_child_weight"].log


def test_search_respects_space(small_xy):
    X, y = small_xy
    space = HyperSpace.from_dict("rf", {"max_depth": {"lo": 2, "hi": 3}, "n_trees": {"lo": 5, "hi": 8}})
    res = search("rf", space, (X[:200], y[:200]), (X[200:], y[200:]), budget=12, seed=1, fixed={"max_features": 4})
    for t in res.trials:
        assert 2 <= t.params["max_depth"] <= 3 and 5 <= t.params["n_trees"] <= 8
    assert res.best_params["max_features"] == 4


@pytest.mark.slow
def test_xgb_search_beats_defaults_on_default_dataset(catalog):
    from tunnelphase import dataset as ds
    from tunnelphase.eval import plan_kfold

    grid = ds.temperature_grid(50.0, 1000.0, 1.0)
    records = ds.assemble(ds.dense_direct(catalog, grid), catalog)
    X, y, groups = ds.feature_matrix(records)
    plan = plan_kfold(groups, 10, 0.1, seed=0)[0]
    train, val = (X[plan.train], y[plan.train]), (X[plan.validation], y[plan.validation])
    res = search("xgb", None, train, val, budget=50, strategy="tpe", seed=0)
    base = fit("xgb", {}, *train, X_val=val[0], y_val=val[1])
    assert res.best_rmse <= rmse(predict(base, val[0]), val[1])
