"""Pipeline configuration: one JSON document, schema-validated, unknown keys rejected."""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass
from importlib import resources

import jsonschema

from .dataset import DEFAULT_ANCHORS, DEFAULT_RANGES, CatalogConfig
from .errors import SpecificationError
from .phase import RegimeThresholds

__all__ = ["SCHEMA", "load_config", "validate_config", "default_config", "Config"]

_range = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}
_dim = {
    "type": "object",
    "additionalProperties": False,
    "required": ["lo", "hi"],
    "properties": {"lo": {"type": "number"}, "hi": {"type": "number"}, "log": {"type": "boolean"}},
}
_families = ["plsr", "ridge", "et", "rf", "gbdt", "xgb"]
_per_family = lambda value: {  # noqa: E731
    "type": "object",
    "additionalProperties": False,
    "properties": {f: value for f in _families},
}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["seed", "catalog", "grid", "dataset", "model", "split", "explain", "phase", "output_dir"],
    "properties": {
        "seed": {"type": "integer", "minimum": 0},
        "output_dir": {"type": "string", "minLength": 1},
        "catalog": {
            "type": "object",
            "additionalProperties": False,
            "required": ["n_systems"],
            "properties": {
                "n_systems": {"type": "integer", "minimum": 2},
                "shape": {"enum": ["eckart", "parabolic"]},
                "ranges": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        k: _range for k in ("v_forward", "eta", "omega_imag", "zpe_shift", "prefactor_scale")
                    },
                },
                "anchors": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "additionalProperties": False,
                        "required": ["id", "label", "site", "v_forward", "eta", "omega_imag", "zpe_shift", "prefactor_scale"],
                        "properties": {
                            "id": {"type": "string", "minLength": 1},
                            "label": {"type": "string"},
                            "site": {"enum": ["COOH", "NH2", "SYNTH"]},
                            "v_forward": {"type": "number"},
                            "eta": {"type": "number"},
                            "omega_imag": {"type": "number"},
                            "zpe_shift": {"type": "number"},
                            "prefactor_scale": {"type": "number"},
                        },
                    },
                },
            },
        },
        "grid": {
            "type": "object",
            "additionalProperties": False,
            "required": ["t_min", "t_max", "raw_step", "augment_step", "fit_window"],
            "properties": {
                "t_min": {"type": "number", "exclusiveMinimum": 0},
                "t_max": {"type": "number", "exclusiveMinimum": 0},
                "raw_step": {"type": "number", "exclusiveMinimum": 0},
                "augment_step": {"type": "number", "exclusiveMinimum": 0},
                "fit_window": _range,
            },
        },
        "dataset": {
            "type": "object",
            "additionalProperties": False,
            "required": ["mode"],
            "properties": {
                "mode": {"enum": ["arrhenius", "direct"]},
                "kappa_mode": {"enum": ["wkb", "wkb-clamped", "exact"]},
            },
        },
        "model": {
            "type": "object",
            "additionalProperties": False,
            "required": ["families", "budget", "strategy"],
            "properties": {
                "families": {"type": "array", "items": {"enum": _families}, "minItems": 1, "uniqueItems": True},
                "budget": {"type": "integer", "minimum": 1},
                "strategy": {"enum": ["random", "tpe"]},
                "spaces": _per_family({"type": "object", "additionalProperties": _dim}),
                "fixed": _per_family({"type": "object", "additionalProperties": {"type": "number"}}),
            },
        },
        "split": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kfold", "test_fraction", "loo"],
            "properties": {
                "kfold": {"type": "integer", "minimum": 2},
                "test_fraction": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
                "loo": {"type": "boolean"},
            },
        },
        "explain": {
            "type": "object",
            "additionalProperties": False,
            "required": ["family", "background", "n_rows"],
            "properties": {
                "family": {"enum": _families},
                "background": {"type": "integer", "minimum": 1},
                "n_rows": {"type": "integer", "minimum": 1},
            },
        },
        "phase": {
            "type": "object",
            "additionalProperties": False,
            "required": ["panels"],
            "properties": {
                "panels": {"type": "array", "items": {"type": "number"}, "minItems": 1},
                "thresholds": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        k: {"type": "number"}
                        for k in (
                            "kappa_strong",
                            "kappa_classical",
                            "T_low",
                            "T_high",
                            "k_low",
                            "k_high",
                            "kie_anomaly",
                            "kappa_anomaly",
                        )
                    },
                },
            },
        },
    },
}


def validate_config(doc) -> dict:
    """Schema check plus the cross-field rules the schema cannot express."""
    try:
        jsonschema.validate(doc, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise SpecificationError(f"config {where}: {exc.message}") from exc
    g = doc["grid"]
    if not g["t_min"] < g["t_max"]:
        raise SpecificationError("config grid: t_min must be below t_max")
    lo, hi = g["fit_window"]
    if not lo < hi:
        raise SpecificationError("config grid: fit_window must be increasing")
    for name, r in doc["catalog"].get("ranges", {}).items():
        if r[0] > r[1]:
            raise SpecificationError(f"config catalog range {name!r} is empty")
    for fam, space in doc["model"].get("spaces", {}).items():
        for name, d in space.items():
            if not d["lo"] < d["hi"]:
                raise SpecificationError(f"config space {fam}.{name}: need lo < hi")
    return doc


def default_config() -> dict:
    text = resources.files("tunnelphase").joinpath("config.default.json").read_text(encoding="utf-8")
    return json.loads(text)


def load_config(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError as exc:
        raise SpecificationError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise SpecificationError(f"config file is not valid JSON: {exc}") from exc
    return validate_config(doc)


@dataclass(frozen=True)
class Config:
    """Typed accessors over a validated config document."""

    doc: dict

    @classmethod
    def load(cls, path) -> "Config":
        return cls(load_config(path))

    @classmethod
    def default(cls) -> "Config":
        return cls(validate_config(default_config()))

    def catalog_config(self):
        c = self.doc["catalog"]
        ranges = dict(DEFAULT_RANGES)
        ranges.update({k: tuple(v) for k, v in c.get("ranges", {}).items()})
        anchors = DEFAULT_ANCHORS
        if "anchors" in c:
            keys = ("id", "label", "site", "v_forward", "eta", "omega_imag", "zpe_shift", "prefactor_scale")
            anchors = tuple(tuple(a[k] for k in keys) for a in c["anchors"])
        return CatalogConfig(n_systems=c["n_systems"], ranges=ranges, anchors=anchors, shape=c.get("shape", "eckart"))

    def thresholds(self):
        return RegimeThresholds(**self.doc["phase"].get("thresholds", {}))

    def __getitem__(self, key):
        return copy.deepcopy(self.doc[key])
