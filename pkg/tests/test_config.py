import copy
import json

import pytest

from tunnelphase.config import Config, default_config, load_config, validate_config
from tunnelphase.errors import SpecificationError
from tunnelphase.models.search import default_space_docs


def test_default_config_valid_and_shipped(tmp_path):
    doc = default_config()
    validate_config(doc)
    root = json.loads(open("config.default.json", encoding="utf-8").read())
    assert root == doc
    cfg = Config.default()
    assert cfg.catalog_config().n_systems == 20
    assert cfg.thresholds().kappa_strong == 2.0


@pytest.mark.parametrize(
    "mutate",
    [
        lambda d: d.update(extra=1),
        lambda d: d["grid"].update(t_min=2000.0),
        lambda d: d["grid"].update(fit_window=[900.0, 300.0]),
        lambda d: d["model"].update(families=["catboost"]),
        lambda d: d["model"].update(budget=0),
        lambda d: d["catalog"].update(ranges={"eta": [0.4, 0.1]}),
        lambda d: d["model"].update(spaces={"xgb": {"max_depth": {"lo": 4, "hi": 2}}}),
        lambda d: d["split"].pop("kfold"),
        lambda d: d["phase"].update(thresholds={"kappa_big": 3.0}),
    ],
)
def test_invalid_configs(mutate):
    doc = copy.deepcopy(default_config())
    mutate(doc)
    with pytest.raises(SpecificationError):
        validate_config(doc)


def test_load_errors(tmp_path):
    with pytest.raises(SpecificationError):
        load_config(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{nope")
    with pytest.raises(SpecificationError):
        load_config(bad)


def test_space_docs_cover_families():
    docs = default_space_docs()
    assert set(docs) == {"plsr", "ridge", "et", "rf", "gbdt", "xgb"}
    doc = copy.deepcopy(default_config())
    doc["model"]["spaces"] = {k: {n: {kk: vv for kk, vv in d.items()} for n, d in v.items()} for k, v in docs.items()}
    validate_config(doc)
