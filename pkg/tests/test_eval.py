import math

import numpy as np
import pytest

from tunnelphase.errors import MetricError, SpecificationError
from tunnelphase.eval import DEVIATIONS_HEADER, TEST, TRAIN, VALIDATION, benchmark, metrics, plan_kfold, plan_loo


def groups_of(sizes):
    return np.concatenate([[f"s{i:02d}"] * n for i, n in enumerate(sizes)])


def test_metric_examples():
    y = np.array([1.0, 2.0, 4.0, 7.0])
    r = metrics(y, y)
    assert (r.mae, r.mse, r.rmse, r.r2, r.dev) == (0.0, 0.0, 0.0, 1.0, 0.0)
    assert metrics(y, np.full(4, y.mean())).r2 == 0.0
    rng = np.random.default_rng(0)
    p = y + rng.normal(size=4)
    r = metrics(y, p)
    assert r.rmse == pytest.approx(math.sqrt(r.mse), abs=1e-12)
    assert r.mae <= r.rmse
    assert r.dev == pytest.approx(10**r.rmse - 1)
    ssr = np.sum((y - p) ** 2)
    sst = np.sum((y - y.mean()) ** 2)
    assert r.r2 == pytest.approx(1 - ssr / sst, abs=1e-14)
    assert metrics(y, y + 0.21).dev == pytest.approx(0.622, abs=1e-3)


def test_metric_errors():
    with pytest.raises(MetricError) as info:
        metrics([2.0, 2.0, 2.0], [1.0, 2.0, 3.0])
    rep = info.value.report
    assert math.isnan(rep.r2) and rep.mae == pytest.approx(2 / 3)
    with pytest.raises(SpecificationError):
        metrics([], [])
    with pytest.raises(SpecificationError):
        metrics([1.0, 2.0], [1.0])


def test_kfold_partition():
    groups = groups_of([951] * 20)
    plans = plan_kfold(groups, 10, 0.1, seed=0)
    assert len(plans) == 10
    test0 = plans[0].test
    assert test0.size == 1902
    assert all(np.array_equal(p.test, test0) for p in plans)
    vals = [p.validation for p in plans]
    allv = np.concatenate(vals)
    assert allv.size == np.unique(allv).size == groups.size - test0.size
    assert {len(v) for v in vals} <= {1711, 1712}
    for p in plans:
        assert set(np.unique(p.roles)) == {TRAIN, VALIDATION, TEST}
        assert p.train.size + p.validation.size + p.test.size == groups.size
    # test rows are stratified by system
    counts = {s: int(np.sum(groups[test0] == s)) for s in np.unique(groups)}
    assert set(counts.values()) <= {95, 96}
    again = plan_kfold(groups, 10, 0.1, seed=0)
    assert all(np.array_equal(a.roles, b.roles) for a, b in zip(plans, again))
    other = plan_kfold(groups, 10, 0.1, seed=1)
    assert not np.array_equal(other[0].roles, plans[0].roles)


def test_kfold_table_counts():
    plans = plan_kfold(groups_of([2000] * 20), 10, 0.1)
    assert plans[0].test.size == 4000 and plans[0].validation.size == 3600


def test_kfold_errors():
    with pytest.raises(SpecificationError):
        plan_kfold(groups_of([5]), 10)
    with pytest.raises(SpecificationError):
        plan_kfold(groups_of([50]), 1)


def test_loo():
    groups = groups_of([951] * 20)
    plans = plan_loo(groups, seed=0)
    assert len(plans) == 20
    for p, held in zip(plans, sorted(set(groups))):
        assert p.plan_id == f"loo-{held}"
        assert np.all(groups[p.test] == held)
        assert np.sum(groups == held) == p.test.size
        assert held not in set(groups[p.train]) | set(groups[p.validation])
        assert abs(p.train.size - 19 * p.validation.size) <= 19
    with pytest.raises(SpecificationError):
        plan_loo(groups_of([100]))


def test_benchmark_small():
    rng = np.random.default_rng(2)
    groups = groups_of([60] * 4)
    X = rng.uniform(0, 1, (240, 4))
    y = 2 * X[:, 0] - X[:, 1] + 0.05 * rng.normal(size=240)
    plans = plan_kfold(groups, 3, 0.2) + plan_loo(groups)
    fams = ["ridge", "gbdt"]
    kw = dict(budget=2, strategy="random", seed=0, spaces={"gbdt": {"n_trees": {"lo": 5, "hi": 10}}})
    a = benchmark(X, y, fams, plans, **kw)
    b = benchmark(X, y, fams, plans, **kw)
    assert a.to_json() == b.to_json() and a.deviations_csv() == b.deviations_csv()
    assert len(a.cells) == 2 * len(plans)
    assert a.summary["ridge"]["kfold"]["n_plans"] == 3 and a.summary["ridge"]["loo"]["n_plans"] == 4
    assert a.mean_test_rmse("ridge", "loo") == pytest.approx(np.mean([c["test"]["rmse"] for c in a.cells[3:7]]))
    lines = a.deviations_csv().splitlines()
    assert lines[0] == ",".join(DEVIATIONS_HEADER)
    assert len(lines) - 1 == sum(p.test.size for p in plans) * 2
    with pytest.raises(SpecificationError):
        benchmark(X, y, [], plans, 1)
