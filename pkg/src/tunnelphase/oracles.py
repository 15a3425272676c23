"""Physics and kinetics oracle suite (run by ``tunnelphase validate-physics``).

Each check compares a numerical route against an independent closed form or
a structural property and returns an :class:`OracleResult`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import dataset as ds
from . import kinetics as kin
from . import physics as phys
from .constants import CONST, MASS_H_AMU, amu_to_kg, kjmol_to_joule
from .errors import TunnelPhaseError

__all__ = ["OracleResult", "run_all", "CHECKS"]


@dataclass(frozen=True)
class OracleResult:
    name: str
    passed: bool
    detail: str


def _parabolic_draws(n, seed):
    """Random parabolic barriers and energies with Kemble transmission <= 1e-3."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        vf = kjmol_to_joule(rng.uniform(20.0, 150.0))
        spec = phys.BarrierSpec(phys.Shape.PARABOLIC, vf, vf, omega_imag=2 * math.pi * CONST.c * 100 * rng.uniform(400, 2500))
        mass = amu_to_kg(rng.uniform(1.0, 3.0))
        hw = CONST.hbar * spec.omega_for(mass)
        gap_min = hw * math.log(999.0) / (2 * math.pi)
        if gap_min >= 0.95 * vf:
            continue
        e = rng.uniform(0.05 * vf, vf - gap_min)
        out.append((spec, mass, e))
    return out


def check_wkb_kemble(n=100, seed=1):
    worst = 0.0
    for spec, mass, e in _parabolic_draws(n, seed):
        a = 2 * math.pi * (spec.v_forward - e) / (CONST.hbar * spec.omega_for(mass))
        ln_kemble = -math.log1p(math.exp(a))
        ln_wkb = float(phys.transmission_wkb(spec, mass, e).log_p)
        worst = max(worst, abs(ln_wkb - ln_kemble) / abs(ln_kemble))
    return OracleResult("wkb_vs_kemble", worst <= 0.01, f"max relative |ln P| error {worst:.3e} (tol 1e-2)")


def check_rectangular_action(n=100, seed=2):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        vf = kjmol_to_joule(rng.uniform(10.0, 150.0))
        width = rng.uniform(0.2, 2.0) * 1e-10
        spec = phys.BarrierSpec(phys.Shape.RECTANGULAR, vf, vf, width=width)
        mass = amu_to_kg(rng.uniform(1.0, 3.0))
        e = rng.uniform(0.01, 0.99) * vf
        exact = math.sqrt(2 * mass * (vf - e)) * width
        worst = max(worst, abs(float(phys.action(spec, mass, e)) - exact) / exact)
    return OracleResult("rectangular_action", worst <= 1e-10, f"max relative action error {worst:.3e} (tol 1e-10)")


def check_classical_limit(catalog):
    worst = 0.0
    for system in catalog:
        for iso in ds.ISOTOPES:
            spec, mass = system.isotopologue(iso)
            k = 10.0 ** kin.kappa(kin.ThermalState(5000.0), spec, mass)
            worst = max(worst, abs(k - 1.0))
    return OracleResult("kappa_5000K", worst <= 0.02, f"max |kappa(5000 K) - 1| = {worst:.4f} (tol 0.02)")


def check_wigner_parabolic(seed=3):
    rng = np.random.default_rng(seed)
    worst_p = worst_w = 0.0
    for _ in range(12):
        omega_cm1 = rng.uniform(600.0, 1600.0)
        spec0 = phys.BarrierSpec.from_external("parabolic", 1.0, 1.0, omega_cm1)
        mass = amu_to_kg(MASS_H_AMU)
        hw = CONST.hbar * spec0.omega_for(mass)
        for u in (0.25, 0.5, 1.0, 1.5, 2.0):
            T = hw / (u * CONST.k_B)
            vf = 25.0 * CONST.k_B * T
            spec = phys.BarrierSpec(phys.Shape.PARABOLIC, vf, vf, omega_imag=spec0.omega_imag)
            k = 10.0 ** kin.kappa(kin.ThermalState(T), spec, mass)
            ref = 0.5 * u / math.sin(0.5 * u)
            worst_p = max(worst_p, abs(k - ref) / ref)
            if u <= 0.5:
                wig = 1 + u * u / 24
                worst_w = max(worst_w, abs(k - wig) / wig)
    ok = worst_p <= 0.01 and worst_w <= 0.05
    return OracleResult(
        "wigner_parabolic", ok, f"parabolic rel err {worst_p:.2e} (tol 1e-2), Wigner rel err {worst_w:.2e} (tol 5e-2)"
    )


def check_monotone_isotope(catalog, grid):
    bad = []
    for system in catalog:
        curves = {}
        for iso in ds.ISOTOPES:
            spec, mass = system.isotopologue(iso)
            curves[iso] = kin.kappa_curve(grid, spec, mass)
        if not np.all(np.diff(curves["H"]) < 0) or not np.all(np.diff(curves["D"]) < 0):
            bad.append(f"{system.id}: not strictly decreasing")
        if np.any(curves["H"] < curves["D"]):
            bad.append(f"{system.id}: kappa_H < kappa_D")
    detail = "; ".join(bad) if bad else f"{len(catalog)} systems strictly decreasing with kappa_H >= kappa_D"
    return OracleResult("monotone_isotope", not bad, detail)


def check_deep_tunneling():
    anchor = next(a for a in ds.DEFAULT_ANCHORS if a[0] == "glu-nh2")
    _, _, _, _, eta, omega, _, _ = anchor
    vf = 84.1
    spec = phys.BarrierSpec.from_external("eckart", vf, vf * (1 - eta), omega)
    lk = kin.kappa(kin.ThermalState(50.0), spec, amu_to_kg(MASS_H_AMU))
    return OracleResult("deep_tunneling_50K", math.isfinite(lk), f"log10 kappa(50 K) = {lk:.3f}")


def check_arrhenius(n=100, seed=4):
    rng = np.random.default_rng(seed)
    grid = ds.temperature_grid(200.0, 1000.0, 50.0)
    worst = 0.0
    for _ in range(n):
        log_a, m, ea = rng.uniform(6, 14), rng.uniform(-2, 3), rng.uniform(10, 150)
        ref = ds.ArrheniusFit(log_a, m, ea, 0.0)
        fit = ds.fit_arrhenius3(list(zip(grid, ref.log10_rate(grid))))
        for got, want in ((fit.log10_A, log_a), (fit.m_exp, m), (fit.E_a, ea)):
            worst = max(worst, abs(got - want) / max(1.0, abs(want)))
    dense = ds.augment({("s", "H", "tun"): ref, ("s", "D", "tun"): ref, ("s", "H", "cla"): ref}, 50.0, 1000.0, 1.0)
    ok = worst <= 1e-8 and len(dense) == 951
    return OracleResult("arrhenius_roundtrip", ok, f"max relative error {worst:.2e} (tol 1e-8), {len(dense)} dense points")


def check_kappa_exact_eckart(catalog):
    """Semiclassical and exact kappa agree to within a factor 2 above 300 K."""
    grid = ds.temperature_grid(300.0, 1000.0, 100.0)
    worst = 0.0
    for system in catalog:
        spec, mass = system.isotopologue("H")
        a = kin.kappa_curve(grid, spec, mass, kin.Mode.WKB)
        b = kin.kappa_curve(grid, spec, mass, kin.Mode.EXACT)
        worst = max(worst, float(np.max(np.abs(a - b))))
    return OracleResult("kappa_wkb_vs_exact", worst <= math.log10(2.0), f"max |log10 ratio| = {worst:.3f} (tol log10 2)")


CHECKS = (
    "wkb_vs_kemble",
    "rectangular_action",
    "kappa_5000K",
    "wigner_parabolic",
    "monotone_isotope",
    "deep_tunneling_50K",
    "arrhenius_roundtrip",
    "kappa_wkb_vs_exact",
)


def run_all(catalog=None, grid=None) -> list[OracleResult]:
    catalog = catalog if catalog is not None else ds.build_catalog()
    grid = grid if grid is not None else ds.temperature_grid(50.0, 1000.0, 50.0)
    steps = (
        check_wkb_kemble,
        check_rectangular_action,
        lambda: check_classical_limit(catalog),
        check_wigner_parabolic,
        lambda: check_monotone_isotope(catalog, grid),
        check_deep_tunneling,
        check_arrhenius,
        lambda: check_kappa_exact_eckart(catalog),
    )
    results = []
    for name, step in zip(CHECKS, steps):
        try:
            results.append(step())
        except TunnelPhaseError as exc:
            results.append(OracleResult(name, False, f"{type(exc).__name__}: {exc}"))
    return results
