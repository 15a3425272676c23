"""Reaction-system catalog, temperature sweeps, Arrhenius fits and ML rows.

The catalog stands in for first-principles reaction paths: each
:class:`ReactionSystem` is a 1D barrier plus H/D masses, a zero-point shift
that raises the D barrier, and a prefactor scale.  Eight named anchors
(four amino acids x two proton-transfer sites) are fixed; the remaining
systems are sampled from seeded uniform ranges.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import kinetics
from .constants import (
    CONST,
    LN10,
    MASS_D_AMU,
    MASS_H_AMU,
    amu_to_kg,
    joule_to_kjmol,
    kg_to_amu,
    kjmol_to_joule,
    m_to_angstrom,
    radps_to_cm1,
)
from .errors import ConsistencyError, DataError, FittingError, SpecificationError
from .physics import BarrierSpec, Shape

ISOTOPES = ("H", "D")
SITES = ("COOH", "NH2", "SYNTH")
FEATURES = ("log10_kie", "T_K", "log10_k_tun", "eta")
TARGET = "log10_kappa"

RAW_HEADER = ("system_id", "isotope", "T_K", "log10_k_cla", "log10_kappa", "log10_k_tun")
DATASET_HEADER = ("system_id", "T_K", "log10_kie", "log10_k_tun", "eta", "log10_kappa")
# Arrhenius fit window (K).  Below ~250 K the steep high-frequency curves bend
# too much for the three-parameter form to stay within 0.15 log10 units.
DEFAULT_FIT_WINDOW = (250.0, 1000.0)
FITS_HEADER = ("system_id", "isotope", "kind", "log10_A", "m_exp", "E_a_kJmol", "residual_rmse", "T_fit_min", "T_fit_max")


@dataclass(frozen=True)
class ReactionSystem:
    id: str
    label: str
    site: str
    barrier: BarrierSpec
    mass_H: float
    mass_D: float
    zpe_shift: float
    prefactor_scale: float

    def __post_init__(self):
        if self.site not in SITES:
            raise SpecificationError(f"unknown site {self.site!r}")
        if not 0.0 < self.mass_H < self.mass_D:
            raise SpecificationError("require 0 < mass_H < mass_D")
        if not self.zpe_shift >= 0.0:
            raise SpecificationError("zpe_shift must be >= 0")
        if not self.prefactor_scale > 0.0:
            raise SpecificationError("prefactor_scale must be > 0")

    @property
    def eta(self) -> float:
        return self.barrier.eta

    def isotopologue(self, isotope: str):
        """(barrier, mass) seen by the H or D isotopologue."""
        if isotope == "H":
            return self.barrier, self.mass_H
        if isotope == "D":
            return self.barrier.shifted(self.zpe_shift), self.mass_D
        raise SpecificationError(f"isotope must be 'H' or 'D', got {isotope!r}")

    def to_external(self) -> dict:
        b = self.barrier
        return {
            "id": self.id,
            "label": self.label,
            "site": self.site,
            "barrier": {
                "shape": b.shape.value,
                "v_forward": joule_to_kjmol(b.v_forward),
                "v_reverse": joule_to_kjmol(b.v_reverse),
                "omega_imag": radps_to_cm1(b.omega_imag),
                "width": m_to_angstrom(b.width),
                "ref_mass": kg_to_amu(b.ref_mass),
                "eta": b.eta,
            },
            "mass_H": kg_to_amu(self.mass_H),
            "mass_D": kg_to_amu(self.mass_D),
            "zpe_shift": joule_to_kjmol(self.zpe_shift),
            "prefactor_scale": self.prefactor_scale,
        }

    @classmethod
    def from_external(cls, doc: dict) -> "ReactionSystem":
        b = doc["barrier"]
        barrier = BarrierSpec.from_external(
            b["shape"], b["v_forward"], b["v_reverse"], b.get("omega_imag", 0.0), b.get("width", 0.0), b["ref_mass"]
        )
        return cls(
            id=doc["id"],
            label=doc["label"],
            site=doc["site"],
            barrier=barrier,
            mass_H=amu_to_kg(doc["mass_H"]),
            mass_D=amu_to_kg(doc["mass_D"]),
            zpe_shift=kjmol_to_joule(doc["zpe_shift"]),
            prefactor_scale=doc["prefactor_scale"],
        )


# Named anchors in external units: (id, label, site, v_forward kJ/mol, eta,
# omega cm^-1, zpe_shift kJ/mol, prefactor_scale).  COOH paths are steeper
# (larger omega) and nearly symmetric; NH2 paths are flatter and more
# asymmetric.  glu-nh2 is tuned so a two-parameter Arrhenius fit of its H
# quantum rate over 200-1000 K gives Ea ~ 84.1 kJ/mol and A ~ 6.4e7 s^-1.
DEFAULT_ANCHORS = (
    ("ala-cooh", "Ala COOH", "COOH", 112.0, 0.10, 1450.0, 4.6, 3.0e-2),
    ("ala-nh2", "Ala NH2", "NH2", 125.0, 0.38, 720.0, 6.2, 1.5e-2),
    ("glu-cooh", "Glu COOH", "COOH", 104.0, 0.15, 1320.0, 5.1, 2.0e-2),
    ("glu-nh2", "Glu NH2", "NH2", 83.98, 0.45, 820.0, 6.0, 3.84e-6),
    ("ile-cooh", "Ile COOH", "COOH", 118.0, 0.08, 1520.0, 4.2, 5.0e-2),
    ("ile-nh2", "Ile NH2", "NH2", 131.0, 0.42, 680.0, 6.5, 8.0e-3),
    ("val-cooh", "Val COOH", "COOH", 109.0, 0.12, 1380.0, 4.9, 4.0e-2),
    ("val-nh2", "Val NH2", "NH2", 122.0, 0.35, 760.0, 5.8, 1.2e-2),
)

DEFAULT_RANGES = {
    "v_forward": (60.0, 140.0),
    "eta": (0.0, 0.5),
    "omega_imag": (600.0, 1600.0),
    "zpe_shift": (2.0, 7.0),
    "prefactor_scale": (1.0e-6, 1.0),
}


@dataclass
class CatalogConfig:
    n_systems: int = 20
    ranges: dict = field(default_factory=lambda: dict(DEFAULT_RANGES))
    anchors: tuple = DEFAULT_ANCHORS
    shape: str = "eckart"
    mass_H: float = MASS_H_AMU
    mass_D: float = MASS_D_AMU


def _make_system(sys_id, label, site, vf, eta, omega, zpe, scale, cfg):
    barrier = BarrierSpec.from_external(cfg.shape, vf, vf * (1.0 - eta), omega, ref_mass_amu=cfg.mass_H)
    return ReactionSystem(
        id=sys_id,
        label=label,
        site=site,
        barrier=barrier,
        mass_H=amu_to_kg(cfg.mass_H),
        mass_D=amu_to_kg(cfg.mass_D),
        zpe_shift=kjmol_to_joule(zpe),
        prefactor_scale=scale,
    )


def build_catalog(config: CatalogConfig | None = None, seed: int = 0) -> list[ReactionSystem]:
    """Anchors first, then seeded SYNTH samples, returned sorted by id."""
    cfg = config or CatalogConfig()
    if cfg.n_systems < 2:
        raise SpecificationError("catalog needs at least 2 systems")
    if Shape(cfg.shape) is Shape.RECTANGULAR:
        raise SpecificationError("catalog barriers need a curvature; rectangular is not supported")
    for key in DEFAULT_RANGES:
        if key not in cfg.ranges:
            raise SpecificationError(f"missing catalog range {key!r}")
        lo, hi = cfg.ranges[key]
        if not (math.isfinite(lo) and math.isfinite(hi)) or lo > hi:
            raise SpecificationError(f"empty catalog range {key!r}: [{lo}, {hi}]")
    if not (0.0 <= cfg.ranges["eta"][0] and cfg.ranges["eta"][1] < 1.0):
        raise SpecificationError("eta range must lie in [0, 1)")
    if cfg.ranges["prefactor_scale"][0] <= 0.0:
        raise SpecificationError("prefactor_scale range must be positive")

    anchors = list(cfg.anchors)[: cfg.n_systems]
    systems = [_make_system(*a, cfg) for a in anchors]
    rng = np.random.default_rng(seed)
    r = cfg.ranges
    for i in range(cfg.n_systems - len(anchors)):
        vf = round(float(rng.uniform(*r["v_forward"])), 3)
        eta = round(float(rng.uniform(*r["eta"])), 4)
        omega = round(float(rng.uniform(*r["omega_imag"])), 2)
        zpe = round(float(rng.uniform(*r["zpe_shift"])), 3)
        lo, hi = np.log10(r["prefactor_scale"])
        scale = float(f"{10.0 ** rng.uniform(lo, hi):.4e}")
        sys_id = f"synth-{i + 1:02d}"
        systems.append(_make_system(sys_id, sys_id.upper(), "SYNTH", vf, eta, omega, zpe, scale, cfg))
    ids = [s.id for s in systems]
    if len(set(ids)) != len(ids):
        raise SpecificationError("duplicate system ids in catalog")
    return sorted(systems, key=lambda s: s.id)


def catalog_to_json(catalog) -> str:
    return json.dumps([s.to_external() for s in catalog], indent=2, allow_nan=False) + "\n"


def catalog_from_json(text: str) -> list[ReactionSystem]:
    try:
        docs = json.loads(text)
        return [ReactionSystem.from_external(d) for d in docs]
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise DataError(f"malformed catalog document: {exc}") from exc


def temperature_grid(t_min: float, t_max: float, step: float) -> np.ndarray:
    """Inclusive grid t_min, t_min + step, ..., t_max."""
    if not (t_min > 0.0 and t_max > t_min and step > 0.0):
        raise SpecificationError(f"bad grid ({t_min}, {t_max}, {step})")
    n = int(round((t_max - t_min) / step))
    if not math.isclose(t_min + n * step, t_max, rel_tol=1e-12, abs_tol=1e-9):
        raise SpecificationError("grid step must divide (t_max - t_min)")
    return t_min + step * np.arange(n + 1, dtype=float)


class CurveRow(NamedTuple):
    system_id: str
    isotope: str
    T: float
    log10_k_cla: float
    log10_kappa: float
    log10_k_tun: float


def sweep(catalog, grid, mode=kinetics.Mode.WKB) -> list[CurveRow]:
    """Rate curves for every (system, isotope), sorted by (system_id, isotope, T)."""
    rows = []
    for system in sorted(catalog, key=lambda s: s.id):
        for isotope in sorted(ISOTOPES):
            for p in kinetics.rate_curve(system, isotope, grid, mode):
                rows.append(CurveRow(system.id, isotope, p.T, p.log10_k_cla, p.log10_kappa, p.log10_k_tun))
    return rows


@dataclass(frozen=True)
class ArrheniusFit:
    """log10 k = log10_A + m_exp log10 T - E_a / (R T ln 10), E_a in kJ/mol."""

    log10_A: float
    m_exp: float
    E_a: float
    residual_rmse: float

    def log10_rate(self, T):
        T = np.asarray(T, dtype=float)
        return self.log10_A + self.m_exp * np.log10(T) - self.E_a * 1.0e3 / (CONST.R * T * LN10)


def fit_arrhenius3(points, free_exponent: bool = True) -> ArrheniusFit:
    """Least-squares three-parameter Arrhenius fit of (T, log10 k) pairs.

    Columns are scaled to unit norm and the system is solved by QR; a
    condition number above 1e12 is treated as rank deficiency.  With
    ``free_exponent=False`` the temperature exponent is pinned to 0 (the
    classic two-parameter Arrhenius line).
    """
    pts = np.asarray(points, dtype=float)
    n_par = 3 if free_exponent else 2
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < n_par + 1:
        raise FittingError(f"need at least {n_par + 1} (T, log10 k) points")
    T, y = pts[:, 0], pts[:, 1]
    if not (np.all(np.isfinite(pts)) and np.all(T > 0.0)):
        raise FittingError("points must be finite with T > 0")
    if np.unique(T).size < n_par + 1:
        raise FittingError("temperatures must be distinct")
    cols = [np.ones_like(T)]
    if free_exponent:
        cols.append(np.log10(T))
    cols.append(-1.0e3 / (CONST.R * T * LN10))
    a = np.column_stack(cols)
    norms = np.linalg.norm(a, axis=0)
    q, r = np.linalg.qr(a / norms)
    cond = np.linalg.cond(r)
    if not math.isfinite(cond) or cond > 1e12:
        raise FittingError("design matrix is rank deficient", condition=cond)
    coef = np.linalg.solve(r, q.T @ y) / norms
    resid = y - a @ coef
    rmse = float(math.sqrt(np.mean(resid**2)))
    if free_exponent:
        return ArrheniusFit(float(coef[0]), float(coef[1]), float(coef[2]), rmse)
    return ArrheniusFit(float(coef[0]), 0.0, float(coef[1]), rmse)


FitKey = tuple  # (system_id, isotope, kind) with kind in {"tun", "cla"}


def fit_curves(rows, window=DEFAULT_FIT_WINDOW) -> dict:
    """Fit every raw curve on the temperatures inside ``window``."""
    lo, hi = window
    groups: dict = {}
    for r in rows:
        if lo <= r.T <= hi:
            groups.setdefault((r.system_id, r.isotope), []).append(r)
    fits = {}
    for (sid, iso), rs in sorted(groups.items()):
        fits[(sid, iso, "tun")] = fit_arrhenius3([(r.T, r.log10_k_tun) for r in rs])
        fits[(sid, iso, "cla")] = fit_arrhenius3([(r.T, r.log10_k_cla) for r in rs])
    return fits


def fits_to_csv(fits: dict, window) -> str:
    rows = []
    for (sid, iso, kind), f in sorted(fits.items()):
        rows.append((sid, iso, kind, f.log10_A, f.m_exp, f.E_a, f.residual_rmse, float(window[0]), float(window[1])))
    return _csv_text(FITS_HEADER, rows)


def fits_from_csv(text: str) -> tuple[dict, tuple]:
    fits, window = {}, None
    for rec in _read_csv(text, FITS_HEADER):
        key = (rec["system_id"], rec["isotope"], rec["kind"])
        fits[key] = ArrheniusFit(
            float(rec["log10_A"]), float(rec["m_exp"]), float(rec["E_a_kJmol"]), float(rec["residual_rmse"])
        )
        window = (float(rec["T_fit_min"]), float(rec["T_fit_max"]))
    return fits, window


class DenseRow(NamedTuple):
    system_id: str
    T: float
    log10_k_tun_H: float
    log10_k_tun_D: float
    log10_k_cla_H: float

    @property
    def log10_kie(self) -> float:
        return self.log10_k_tun_H - self.log10_k_tun_D

    @property
    def log10_kappa(self) -> float:
        return self.log10_k_tun_H - self.log10_k_cla_H


_REQUIRED_FITS = (("H", "tun"), ("D", "tun"), ("H", "cla"))


def augment(fits: dict, t_min: float, t_max: float, step: float) -> list[DenseRow]:
    """Regenerate the fitted curves on a dense temperature grid."""
    grid = temperature_grid(t_min, t_max, step)
    system_ids = sorted({k[0] for k in fits})
    out = []
    for sid in system_ids:
        missing = [f"{iso}/{kind}" for iso, kind in _REQUIRED_FITS if (sid, iso, kind) not in fits]
        if missing:
            raise ConsistencyError(f"system {sid!r} lacks fits for {', '.join(missing)}")
        tun_h = fits[(sid, "H", "tun")].log10_rate(grid)
        tun_d = fits[(sid, "D", "tun")].log10_rate(grid)
        cla_h = fits[(sid, "H", "cla")].log10_rate(grid)
        out.extend(DenseRow(sid, *vals) for vals in zip(grid.tolist(), tun_h.tolist(), tun_d.tolist(), cla_h.tolist()))
    return out


def dense_direct(catalog, grid, mode=kinetics.Mode.WKB) -> list[DenseRow]:
    """Dense curves straight from quadrature (no Arrhenius fitting)."""
    out = []
    for system in sorted(catalog, key=lambda s: s.id):
        h = kinetics.rate_curve(system, "H", grid, mode)
        d = kinetics.rate_curve(system, "D", grid, mode)
        out.extend(DenseRow(system.id, ph.T, ph.log10_k_tun, pd.log10_k_tun, ph.log10_k_cla) for ph, pd in zip(h, d))
    return out


class DatasetRecord(NamedTuple):
    system_id: str
    T: float
    log10_kie: float
    log10_k_tun: float
    eta: float
    log10_kappa: float


def assemble(dense, catalog) -> list[DatasetRecord]:
    """One ML record per (system, T), sorted by (system_id, T)."""
    eta = {s.id: s.eta for s in catalog}
    records = []
    for i, row in enumerate(sorted(dense, key=lambda r: (r.system_id, r.T))):
        if row.system_id not in eta:
            raise ConsistencyError(f"dense row {i} refers to unknown system {row.system_id!r}")
        rec = DatasetRecord(row.system_id, row.T, row.log10_kie, row.log10_k_tun_H, eta[row.system_id], row.log10_kappa)
        if not all(math.isfinite(v) for v in rec[1:]):
            raise DataError(f"non-finite value in dataset row {i} ({rec.system_id}, T={rec.T})")
        records.append(rec)
    return records


def feature_matrix(records):
    """(X, y, groups) arrays in the fixed feature order."""
    x = np.array([(r.log10_kie, r.T, r.log10_k_tun, r.eta) for r in records], dtype=float)
    y = np.array([r.log10_kappa for r in records], dtype=float)
    groups = np.array([r.system_id for r in records])
    return x, y, groups


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _read_csv(text, header):
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != tuple(header):
        raise DataError(f"unexpected CSV header {reader.fieldnames!r}, want {list(header)!r}")
    return list(reader)


def raw_to_csv(rows) -> str:
    return _csv_text(RAW_HEADER, rows)


def raw_from_csv(text: str) -> list[CurveRow]:
    return [
        CurveRow(r["system_id"], r["isotope"], float(r["T_K"]), float(r["log10_k_cla"]), float(r["log10_kappa"]), float(r["log10_k_tun"]))
        for r in _read_csv(text, RAW_HEADER)
    ]


def dataset_to_csv(records) -> str:
    return _csv_text(DATASET_HEADER, records)


def dataset_from_csv(text: str) -> list[DatasetRecord]:
    out = []
    for i, r in enumerate(_read_csv(text, DATASET_HEADER)):
        try:
            rec = DatasetRecord(
                r["system_id"], float(r["T_K"]), float(r["log10_kie"]), float(r["log10_k_tun"]), float(r["eta"]), float(r["log10_kappa"])
            )
        except ValueError as exc:
            raise DataError(f"dataset row {i}: {exc}") from exc
        if not all(math.isfinite(v) for v in rec[1:]):
            raise DataError(f"non-finite value in dataset row {i}")
        out.append(rec)
    return out
