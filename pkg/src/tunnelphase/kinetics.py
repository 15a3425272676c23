"""Thermal rate constants and tunneling corrections, all in log10 domain.

kappa(T) is the ratio of the Boltzmann-weighted transmission integral to its
classical step-function counterpart.  With the reactant channel as energy
origin, the classical integral is exp(-beta V)/beta, so

    ln kappa = ln beta + ln int P(E) exp(-beta (E - V)) dE

and only the numerator needs quadrature.  The numerator is evaluated on a
panel grid in energy (Gauss-Legendre per panel, log-sum-exp accumulation)
that is shared by every temperature of a curve, so a whole temperature sweep
costs one set of transmission evaluations per grid level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.special import logsumexp

from .constants import CONST, LN10
from .errors import ConsistencyError, DomainError, NumericalError, SpecificationError
from .physics import BarrierSpec, transmission_exact, transmission_semiclassical, transmission_wkb

__all__ = [
    "Mode",
    "ThermalState",
    "RatePoint",
    "classical_rate",
    "kappa",
    "kappa_curve",
    "wigner_kappa",
    "parabolic_kappa",
    "rate_curve",
    "kie",
]

# Upper integration limit above the barrier top, in units of k_B T.
TAIL_KT = 40.0


class Mode(str, Enum):
    """Transmission model used inside the kappa integral.

    ``wkb`` is the uniform semiclassical form built on the WKB action;
    ``wkb-clamped`` is the bare exp(-2S/hbar) clamped to 1 above the top;
    ``exact`` uses the closed-form quantum transmission.
    """

    WKB = "wkb"
    WKB_CLAMPED = "wkb-clamped"
    EXACT = "exact"


_TRANSMISSION = {
    Mode.WKB: transmission_semiclassical,
    Mode.WKB_CLAMPED: transmission_wkb,
    Mode.EXACT: transmission_exact,
}


@dataclass(frozen=True)
class ThermalState:
    T: float

    def __post_init__(self):
        if not (math.isfinite(self.T) and self.T > 0.0):
            raise SpecificationError(f"temperature must be positive, got {self.T!r}")

    @property
    def beta(self) -> float:
        return 1.0 / (CONST.k_B * self.T)

    @property
    def kT(self) -> float:
        return CONST.k_B * self.T


@dataclass(frozen=True)
class RatePoint:
    T: float
    log10_k_cla: float
    log10_kappa: float
    log10_k_tun: float


def classical_rate(state: ThermalState, e_act: float, prefactor_scale: float = 1.0) -> float:
    """log10 of prefactor_scale * (k_B T / h) * exp(-beta E)."""
    if e_act < 0.0:
        raise SpecificationError("activation energy must be >= 0")
    if not prefactor_scale > 0.0:
        raise SpecificationError("prefactor_scale must be > 0")
    return math.log10(prefactor_scale * CONST.k_B * state.T / CONST.h) - state.beta * e_act / LN10


def wigner_kappa(state: ThermalState, omega_imag: float) -> float:
    """1 + u^2/24 with u = hbar omega / k_B T; valid above the crossover temperature."""
    u = CONST.hbar * omega_imag * state.beta
    if u >= 2.0 * math.pi:
        raise DomainError(f"u = {u:.4g} >= 2 pi: below the crossover temperature")
    return 1.0 + u * u / 24.0


def parabolic_kappa(state: ThermalState, omega_imag: float) -> float:
    """(u/2) / sin(u/2), the untruncated parabolic-barrier result."""
    u = CONST.hbar * omega_imag * state.beta
    if u >= 2.0 * math.pi:
        raise DomainError(f"u = {u:.4g} >= 2 pi: below the crossover temperature")
    if u == 0.0:
        return 1.0
    return 0.5 * u / math.sin(0.5 * u)


class _EnergyRule:
    """Panel Gauss-Legendre rule on [floor, top + tail] for one grid level."""

    NODES, WEIGHTS = np.polynomial.legendre.leggauss(12)

    def __init__(self, spec: BarrierSpec, mass: float, t_min: float, t_max: float, level: int):
        omega = spec.omega_for(mass) if spec.omega_imag > 0.0 else math.inf
        h0 = min(CONST.k_B * t_min, CONST.hbar * omega / (2.0 * math.pi)) / 2.0**level
        lo, top = max(spec.floor, 0.0), spec.v_forward
        span = top - lo
        # geometric grading toward the channel floor, where the WKB action has
        # a logarithmic slope singularity
        first = min(h0, span)
        graded = lo + first * 2.0 ** -np.arange(14 + level, 0, -1, dtype=float)
        n_uniform = max(1, int(math.ceil((span - first) / h0)))
        uniform = np.linspace(lo + first, top, n_uniform + 1)
        edges = [np.array([lo]), graded, uniform]
        e_end = top + TAIL_KT * CONST.k_B * t_max
        above = [top]
        w = h0
        while above[-1] < e_end:
            above.append(above[-1] + w)
            w *= 1.25
        edges.append(np.array(above[1:]))
        edges = np.unique(np.concatenate(edges))
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[1:] + edges[:-1])
        self.energy = (mid[:, None] + half[:, None] * self.NODES[None, :]).ravel()
        self.log_weight = np.log((half[:, None] * self.WEIGHTS[None, :]).ravel())
        self.top = top


class _KappaTable:
    """Transmission tabulated on one energy rule, reusable across temperatures."""

    def __init__(self, spec, mass, mode, t_min, t_max, level):
        rule = _EnergyRule(spec, mass, t_min, t_max, level)
        log_p = _TRANSMISSION[mode](spec, mass, rule.energy).log_p
        keep = np.isfinite(log_p)
        self.offset = rule.energy[keep] - rule.top
        self.log_terms = log_p[keep] + rule.log_weight[keep]
        self.n_nodes = int(rule.energy.size)

    def ln_kappa(self, beta: np.ndarray) -> np.ndarray:
        out = np.empty(beta.shape)
        for i, b in enumerate(beta):
            out[i] = math.log(b) + logsumexp(self.log_terms - b * self.offset)
        return out


def kappa_curve(temperatures, spec: BarrierSpec, mass: float, mode=Mode.WKB, rtol: float = 1e-6, max_level: int = 6):
    """log10 kappa on a set of temperatures, converged to ``rtol`` on ln kappa.

    The energy grid is refined by halving panel widths until two successive
    levels agree at every temperature.
    """
    mode = Mode(mode)
    t = np.asarray(temperatures, dtype=float)
    if t.size == 0 or not np.all(np.isfinite(t) & (t > 0.0)):
        raise SpecificationError("temperatures must be finite and positive")
    if not (math.isfinite(mass) and mass > 0.0):
        raise SpecificationError("mass must be positive")
    beta = 1.0 / (CONST.k_B * t.ravel())
    t_min, t_max = float(t.min()), float(t.max())
    prev = _KappaTable(spec, mass, mode, t_min, t_max, 0).ln_kappa(beta)
    for level in range(1, max_level + 1):
        cur = _KappaTable(spec, mass, mode, t_min, t_max, level).ln_kappa(beta)
        err = np.abs(cur - prev)
        # relative on ln kappa, but no tighter than rtol on kappa itself near kappa = 1
        if np.all(err <= rtol * np.maximum(np.abs(cur), 1.0)):
            return (cur / LN10).reshape(t.shape)
        prev = cur
    worst = int(np.argmax(err))
    raise NumericalError(
        "kappa quadrature did not converge",
        temperature=float(t.ravel()[worst]),
        ln_kappa=float(cur[worst]),
        change=float(err[worst]),
        level=max_level,
    )


def kappa(state: ThermalState, spec: BarrierSpec, mass: float, mode=Mode.WKB) -> float:
    """log10 kappa at a single temperature."""
    return float(kappa_curve([state.T], spec, mass, mode)[0])


def rate_curve(system, isotope: str, grid, mode=Mode.WKB):
    """RatePoints for one isotopologue of ``system`` over an increasing grid."""
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise SpecificationError("temperature grid must be a nonempty 1-D sequence")
    if np.any(grid <= 0.0) or np.any(np.diff(grid) <= 0.0):
        raise SpecificationError("temperature grid must be positive and strictly increasing")
    spec, mass = system.isotopologue(isotope)
    log_kappa = kappa_curve(grid, spec, mass, mode)
    points = []
    for T, lk in zip(grid.tolist(), log_kappa.tolist()):
        lc = classical_rate(ThermalState(T), spec.v_forward, system.prefactor_scale)
        points.append(RatePoint(T=T, log10_k_cla=lc, log10_kappa=lk, log10_k_tun=lc + lk))
    return points


def kie(point_h: RatePoint, point_d: RatePoint) -> float:
    """log10 of k_tun(H) / k_tun(D) at a shared temperature."""
    if point_h.T != point_d.T:
        raise ConsistencyError(f"temperature mismatch: {point_h.T} K vs {point_d.T} K")
    return point_h.log10_k_tun - point_d.log10_k_tun
