import numpy as np
import pytest

from tunnelphase.dataset import FEATURES
from tunnelphase.errors import CapabilityError, ConsistencyError, SpecificationError
from tunnelphase.explain import SHAP_HEADER, gain_importance, sample_background, shap_to_csv, shapley_exact
from tunnelphase.models import Family, TrainedModel, default_hyperparameters, fit, predict
from tunnelphase.models.trees import Ensemble, Tree

HP = {
    "ridge": {},
    "plsr": {"n_components": 3},
    "rf": {"n_trees": 10, "max_depth": 5},
    "et": {"n_trees": 10, "max_depth": 5},
    "gbdt": {"n_trees": 20, "max_depth": 3},
    "xgb": {"n_trees": 20, "max_depth": 3},
}


def stump(feature, threshold, lo, hi, gain):
    return Tree(
        feature=np.array([feature, -1, -1]),
        threshold=np.array([threshold, 0.0, 0.0]),
        left=np.array([1, -1, -1]),
        right=np.array([2, -1, -1]),
        value=np.array([0.0, lo, hi]),
        count=np.array([10.0, 5.0, 5.0]),
        gain=np.array([gain, 0.0, 0.0]),
    )


def tree_model(trees, average=False):
    ens = Ensemble(base=0.0, scale=1.0, trees=tuple(trees), average=average)
    return TrainedModel(Family.GBDT, default_hyperparameters("gbdt"), tuple(FEATURES), ens)


@pytest.mark.parametrize("family", list(HP))
def test_local_accuracy_every_family(family, small_xy):
    X, y = small_xy
    m = fit(family, HP[family], X, y)
    bg = sample_background(X, 64, seed=1)
    rep = shapley_exact(m, X[:40], bg)
    f = predict(m, X[:40])
    err = np.abs(rep.base_value + rep.phi.sum(axis=1) - f)
    assert np.all(err <= 1e-9 * np.maximum(1.0, np.abs(f)))
    assert rep.background_size == 64


def test_linear_closed_form(small_xy):
    X, y = small_xy
    m = fit("ridge", {"alpha": 0.3}, X, y)
    bg = sample_background(X, 100, seed=2)
    rows = X[:25]
    rep = shapley_exact(m, rows, bg)
    want = m.payload.raw_coef[None, :] * (rows - bg.mean(axis=0)[None, :])
    np.testing.assert_allclose(rep.phi, want, atol=1e-9)


def test_ignored_feature_exact_zero(small_xy):
    X, _ = small_xy
    m = tree_model([stump(0, 0.5, -1.0, 1.0, 3.0), stump(2, 0.3, 0.5, -0.5, 1.0)])
    rep = shapley_exact(m, X[:30], X[30:90])
    assert np.all(rep.phi[:, 1] == 0.0) and np.all(rep.phi[:, 3] == 0.0)


def test_symmetry_exchangeable_features(small_xy):
    X, _ = small_xy
    # f = g(x0) + g(x1) with the same g; exchangeable when x0 and x1 swap
    m = tree_model([stump(0, 0.5, 0.0, 1.0, 1.0), stump(1, 0.5, 0.0, 1.0, 1.0)])
    rows = X[:20].copy()
    rows[:, 1] = rows[:, 0]
    bg = X[20:80].copy()
    bg[:, 1] = bg[:, 0]
    rep = shapley_exact(m, rows, bg)
    np.testing.assert_allclose(rep.phi[:, 0], rep.phi[:, 1], atol=1e-9)


def test_determinism_and_csv(small_xy):
    X, y = small_xy
    m = fit("xgb", HP["xgb"], X, y)
    a = shapley_exact(m, X[:10], sample_background(X, 50, seed=3))
    b = shapley_exact(m, X[:10], sample_background(X, 50, seed=3))
    assert shap_to_csv(a, range(10)) == shap_to_csv(b, range(10))
    lines = shap_to_csv(a, range(10)).splitlines()
    assert lines[0] == ",".join(SHAP_HEADER) and len(lines) == 11
    assert a.ranking()[0] in FEATURES and sorted(a.ranking()) == sorted(FEATURES)


def test_shap_errors(small_xy):
    X, y = small_xy
    m = fit("ridge", {}, X, y)
    with pytest.raises(ConsistencyError):
        shapley_exact(m, X[:5, :3], X[:10])
    with pytest.raises(SpecificationError):
        shapley_exact(m, X[:5], np.empty((0, 4)))
    with pytest.raises(SpecificationError):
        sample_background(X, 0)
    assert sample_background(X[:10], 256).shape == (10, 4)


def test_gain_importance_examples(small_xy):
    assert gain_importance(tree_model([stump(0, 0.5, -1, 1, 2.5)])).tolist() == [1.0, 0.0, 0.0, 0.0]
    alt = [stump(i % 2, 0.5, -1, 1, 4.0) for i in range(6)]
    assert gain_importance(tree_model(alt)).tolist() == [0.5, 0.5, 0.0, 0.0]
    X, y = small_xy
    imp = gain_importance(fit("rf", HP["rf"], X, y))
    assert abs(imp.sum() - 1.0) <= 1e-12
    with pytest.raises(CapabilityError):
        gain_importance(fit("plsr", {}, X, y))
