"""One-dimensional barrier models and transmission probabilities.

Three barrier shapes are supported (Eckart, truncated parabola, rectangle).
Energies are per molecule in J, positions in m, masses in kg.  The reactant
channel sits at V = 0; the Eckart product channel sits at
``v_forward - v_reverse``.

Transmission routes:

* :func:`transmission_wkb`: exp(-2S/hbar) from the barrier action S below the
  top, clamped to 1 at and above it.
* :func:`transmission_semiclassical`: uniform semiclassical form
  1/(1 + exp(2S/hbar)) below the top, mirrored as 1 - P(2V - E) above it.
* :func:`transmission_exact`: closed-form quantum transmission (Kemble,
  Eckart hyperbolic-cosine formula, rectangular plane-wave matching).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import NamedTuple

import numpy as np
from scipy.special import expit

from .constants import CONST, MASS_H_AMU, amu_to_kg, angstrom_to_m, cm1_to_radps, kjmol_to_joule
from .errors import CapabilityError, DomainError, NumericalError, SpecificationError

__all__ = [
    "Shape",
    "BarrierSpec",
    "TurningPoints",
    "Transmission",
    "potential",
    "potential_gradient",
    "turning_points",
    "action",
    "transmission_wkb",
    "transmission_semiclassical",
    "transmission_exact",
]


class Shape(str, Enum):
    ECKART = "eckart"
    PARABOLIC = "parabolic"
    RECTANGULAR = "rectangular"


@dataclass(frozen=True)
class BarrierSpec:
    """Barrier geometry in SI per-molecule units.

    ``ref_mass`` is the mass used to turn ``omega_imag`` into a barrier
    curvature (``V''(top) = -ref_mass * omega_imag**2``).  Other masses see the
    same geometry, so their effective barrier frequency is
    ``omega_imag * sqrt(ref_mass / mass)``.
    """

    shape: Shape
    v_forward: float
    v_reverse: float
    omega_imag: float = 0.0
    width: float = 0.0
    ref_mass: float = MASS_H_AMU * CONST.amu

    def __post_init__(self):
        object.__setattr__(self, "shape", Shape(self.shape))
        vf, vr = self.v_forward, self.v_reverse
        if not (math.isfinite(vf) and vf > 0.0):
            raise SpecificationError(f"v_forward must be positive, got {vf!r}")
        if not (math.isfinite(vr) and 0.0 < vr <= vf):
            raise SpecificationError(f"v_reverse must lie in (0, v_forward], got {vr!r}")
        if not (math.isfinite(self.ref_mass) and self.ref_mass > 0.0):
            raise SpecificationError("ref_mass must be positive")
        if self.shape is Shape.RECTANGULAR:
            if not (math.isfinite(self.width) and self.width > 0.0):
                raise SpecificationError("rectangular barrier needs width > 0")
        elif not (math.isfinite(self.omega_imag) and self.omega_imag > 0.0):
            raise SpecificationError(f"{self.shape.value} barrier needs omega_imag > 0")

    @classmethod
    def from_external(
        cls,
        shape,
        v_forward_kjmol,
        v_reverse_kjmol,
        omega_cm1=0.0,
        width_angstrom=0.0,
        ref_mass_amu=MASS_H_AMU,
    ):
        """Build a spec from kJ/mol, cm^-1, Angstrom and amu."""
        return cls(
            shape=Shape(shape),
            v_forward=kjmol_to_joule(v_forward_kjmol),
            v_reverse=kjmol_to_joule(v_reverse_kjmol),
            omega_imag=cm1_to_radps(omega_cm1),
            width=angstrom_to_m(width_angstrom),
            ref_mass=amu_to_kg(ref_mass_amu),
        )

    @property
    def eta(self) -> float:
        """Asymmetry (v_forward - v_reverse) / v_forward."""
        return (self.v_forward - self.v_reverse) / self.v_forward

    @property
    def floor(self) -> float:
        """Lowest energy with an open product channel."""
        if self.shape is Shape.ECKART:
            return self.v_forward - self.v_reverse
        return 0.0

    @property
    def eckart_b(self) -> float:
        return (math.sqrt(self.v_forward) + math.sqrt(self.v_reverse)) ** 2

    @property
    def length_scale(self) -> float:
        """Eckart range parameter L, from the top curvature."""
        if self.shape is not Shape.ECKART:
            raise CapabilityError("length_scale is defined for Eckart barriers only")
        k_top = self.ref_mass * self.omega_imag**2
        return math.sqrt(2.0 * self.v_forward * self.v_reverse / (self.eckart_b * k_top))

    @property
    def half_width(self) -> float:
        """Distance from the parabola top to its zero crossing."""
        if self.shape is not Shape.PARABOLIC:
            raise CapabilityError("half_width is defined for parabolic barriers only")
        return math.sqrt(2.0 * self.v_forward / (self.ref_mass * self.omega_imag**2))

    @property
    def x_top(self) -> float:
        """Position of the barrier maximum (midpoint for the rectangle)."""
        if self.shape is Shape.RECTANGULAR:
            return 0.5 * self.width
        return 0.0

    def omega_for(self, mass: float) -> float:
        """Barrier frequency seen by a particle of ``mass``."""
        return self.omega_imag * math.sqrt(self.ref_mass / mass)

    def shifted(self, delta: float) -> "BarrierSpec":
        """Raise both heights by ``delta``; the product asymptote is unchanged."""
        return replace(self, v_forward=self.v_forward + delta, v_reverse=self.v_reverse + delta)


class TurningPoints(NamedTuple):
    x1: np.ndarray
    x2: np.ndarray


class Transmission(NamedTuple):
    p: np.ndarray
    log_p: np.ndarray


def _eckart_z(spec, x):
    return np.asarray(x, dtype=float) / spec.length_scale + 0.5 * math.log(spec.v_forward / spec.v_reverse)


def potential(spec: BarrierSpec, x):
    """V(x) in J; vectorized over ``x``."""
    x = np.asarray(x, dtype=float)
    if spec.shape is Shape.ECKART:
        z = _eckart_z(spec, x)
        s = expit(z)
        a = spec.v_forward - spec.v_reverse
        return a * s + spec.eckart_b * s * expit(-z)
    if spec.shape is Shape.PARABOLIC:
        v = spec.v_forward - 0.5 * spec.ref_mass * spec.omega_imag**2 * x**2
        return np.maximum(v, 0.0)
    inside = (x >= 0.0) & (x <= spec.width)
    return np.where(inside, spec.v_forward, 0.0)


def potential_gradient(spec: BarrierSpec, x):
    """dV/dx; zero where V is piecewise constant."""
    x = np.asarray(x, dtype=float)
    if spec.shape is Shape.ECKART:
        z = _eckart_z(spec, x)
        s = expit(z)
        q = s * expit(-z)
        a = spec.v_forward - spec.v_reverse
        return (a * q + spec.eckart_b * q * (1.0 - 2.0 * s)) / spec.length_scale
    if spec.shape is Shape.PARABOLIC:
        k = spec.ref_mass * spec.omega_imag**2
        return np.where(np.abs(x) < spec.half_width, -k * x, 0.0)
    return np.zeros_like(x)


def _solve_bracketed(f, fprime, lo, hi, rtol=1e-12, max_iter=200):
    """Safeguarded Newton on brackets [lo, hi] with f(lo) * f(hi) < 0.

    Newton steps that leave the current bracket fall back to bisection.
    """
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    f_lo = f(lo, np.ones(lo.shape, dtype=bool))
    x = 0.5 * (lo + hi)
    active = np.ones(x.shape, dtype=bool)
    for _ in range(max_iter):
        if not active.any():
            break
        idx = np.flatnonzero(active)
        xa = x[idx]
        sub = np.zeros(x.shape, dtype=bool)
        sub[idx] = True
        fx = f(xa, sub)
        same = np.sign(fx) == np.sign(f_lo[idx])
        lo[idx] = np.where(same, xa, lo[idx])
        hi[idx] = np.where(same, hi[idx], xa)
        fp = fprime(xa, sub)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = xa - fx / fp
        inside = np.isfinite(step) & (step > lo[idx]) & (step < hi[idx])
        new = np.where(inside, step, 0.5 * (lo[idx] + hi[idx]))
        scale = np.maximum(np.abs(lo[idx]), np.abs(hi[idx]))
        done = (fx == 0.0) | (np.abs(new - xa) <= rtol * scale) | (hi[idx] - lo[idx] <= rtol * scale)
        x[idx] = np.where(fx == 0.0, xa, new)
        active[idx[done]] = False
    if active.any():
        raise NumericalError("turning-point solver did not converge", unconverged=int(active.sum()))
    return x


def _two_root_window(spec):
    return max(spec.floor, 0.0), spec.v_forward


def turning_points(spec: BarrierSpec, energy) -> TurningPoints:
    """Classical turning points x1 < x2 with V(x1) = V(x2) = E.

    Raises DomainError unless every energy lies strictly inside the
    two-root window (max(0, floor), v_forward).
    """
    e = np.asarray(energy, dtype=float)
    scalar = e.ndim == 0
    e = np.atleast_1d(e)
    lo_e, hi_e = _two_root_window(spec)
    if not np.all((e > lo_e) & (e < hi_e)):
        raise DomainError(f"energy outside the two-root window ({lo_e:.6g}, {hi_e:.6g}) J")
    if spec.shape is Shape.RECTANGULAR:
        x1, x2 = np.zeros_like(e), np.full_like(e, spec.width)
    else:
        x1, x2 = _turning_points_unchecked(spec, e)
    if scalar:
        return TurningPoints(x1[0], x2[0])
    return TurningPoints(x1, x2)


def _turning_points_unchecked(spec, e):
    def f(x, sub):
        return potential(spec, x) - e[sub]

    def fp(x, sub):
        return potential_gradient(spec, x)

    if spec.shape is Shape.ECKART:
        big_l = spec.length_scale
        z_top = 0.5 * math.log(spec.v_forward / spec.v_reverse)
        a = spec.v_forward - spec.v_reverse
        b = spec.eckart_b
        z_left = np.minimum(np.log(e / (a + b)) - 1.0, z_top - 1.0)
        with np.errstate(divide="ignore"):
            z_right = np.maximum(np.log(b / np.maximum(e - a, 0.0)) + 1.0, z_top + 1.0)
        left_far = big_l * (z_left - z_top)
        right_far = big_l * (z_right - z_top)
    else:
        left_far = np.full_like(e, -spec.half_width)
        right_far = np.full_like(e, spec.half_width)
    top = np.zeros_like(e)
    x1 = _solve_bracketed(f, fp, left_far, top)
    x2 = _solve_bracketed(f, fp, top, right_far)
    return x1, x2


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


def _composite_theta_rule(panels):
    """Gauss-Legendre nodes/weights on [0, pi] split into equal panels."""
    edges = np.linspace(0.0, math.pi, panels + 1)
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
    weights = (half[:, None] * _GL_WEIGHTS[None, :]).ravel()
    return nodes, weights


def _action_on_rule(spec, mass, e, x1, x2, panels):
    theta, w = _composite_theta_rule(panels)
    half = 0.5 * (x2 - x1)
    mid = 0.5 * (x1 + x2)
    x = mid[:, None] - half[:, None] * np.cos(theta)[None, :]
    gap = np.maximum(potential(spec, x) - e[:, None], 0.0)
    integrand = np.sqrt(2.0 * mass * gap) * np.sin(theta)[None, :]
    return half * (integrand @ w)


def action(spec: BarrierSpec, mass: float, energy, rtol: float = 1e-8, max_panels: int = 1024):
    """Barrier action S(E) = int_{x1}^{x2} sqrt(2 m (V - E)) dx in J s.

    Uses x = mid - half * cos(theta), which removes the square-root endpoint
    singularities, then composite 16-point Gauss-Legendre in theta with panel
    doubling until successive estimates agree to ``rtol``.
    """
    if not mass > 0.0:
        raise SpecificationError("mass must be positive")
    e = np.atleast_1d(np.asarray(energy, dtype=float))
    x1, x2 = turning_points(spec, e)
    x1, x2 = np.atleast_1d(x1), np.atleast_1d(x2)
    result = np.empty_like(e)
    todo = np.arange(e.size)
    panels = 1
    prev = _action_on_rule(spec, mass, e, x1, x2, panels)
    while todo.size:
        panels *= 2
        if panels > max_panels:
            raise NumericalError("action quadrature did not converge", unconverged=int(todo.size))
        cur = _action_on_rule(spec, mass, e[todo], x1[todo], x2[todo], panels)
        ok = np.abs(cur - prev) <= rtol * np.abs(cur)
        result[todo[ok]] = cur[ok]
        todo, prev = todo[~ok], cur[~ok]
    if np.ndim(energy) == 0:
        return result[0]
    return result


def _wkb_exponent(spec, mass, e):
    """2 S(E) / hbar for energies in the two-root window, +inf below it."""
    lo_e, hi_e = _two_root_window(spec)
    out = np.full(e.shape, np.inf)
    inside = (e > lo_e) & (e < hi_e)
    if inside.any():
        out[inside] = 2.0 * action(spec, mass, e[inside]) / CONST.hbar
    out[e >= hi_e] = 0.0
    return out


def _check_mass(mass):
    if not (math.isfinite(mass) and mass > 0.0):
        raise SpecificationError(f"mass must be positive, got {mass!r}")


def _pack(log_p, energy):
    p = np.exp(log_p)
    if np.ndim(energy) == 0:
        return Transmission(float(p[0]), float(log_p[0]))
    return Transmission(p, log_p)


def transmission_wkb(spec: BarrierSpec, mass: float, energy) -> Transmission:
    """exp(-2S/hbar) below the top, 1 at and above it, 0 below the channel floor."""
    _check_mass(mass)
    e = np.atleast_1d(np.asarray(energy, dtype=float))
    return _pack(-_wkb_exponent(spec, mass, e), energy)


def transmission_semiclassical(spec: BarrierSpec, mass: float, energy) -> Transmission:
    """Uniform semiclassical transmission built on the WKB action.

    Below the top P = 1 / (1 + exp(2S/hbar)); above it P(E) = 1 - P(2V - E),
    so P = 1/2 at the top and the profile is antisymmetric about it.
    """
    _check_mass(mass)
    e = np.atleast_1d(np.asarray(energy, dtype=float))
    vf = spec.v_forward
    below = e < vf
    log_p = np.empty_like(e)
    if below.any():
        log_p[below] = -np.logaddexp(0.0, _wkb_exponent(spec, mass, e[below]))
    above = ~below
    if above.any():
        mirrored = 2.0 * vf - e[above]
        expo = np.full(mirrored.shape, np.inf)
        inner = mirrored < vf
        expo[inner] = _wkb_exponent(spec, mass, mirrored[inner])
        expo[~inner] = 0.0
        log_p[above] = -np.logaddexp(0.0, -expo)
    return _pack(log_p, energy)


def _log_sinh(y):
    y = np.asarray(y, dtype=float)
    out = np.empty_like(y)
    big = y > 1.0
    out[big] = y[big] + np.log1p(-np.exp(-2.0 * y[big])) - math.log(2.0)
    with np.errstate(divide="ignore"):
        out[~big] = np.log(np.sinh(y[~big]))
    return out


def _log_cosh(y):
    y = np.abs(np.asarray(y, dtype=float))
    return y + np.log1p(np.exp(-2.0 * y)) - math.log(2.0)


def _exact_parabolic(spec, mass, e):
    s = 2.0 * math.pi * (spec.v_forward - e) / (CONST.hbar * spec.omega_for(mass))
    log_p = -np.logaddexp(0.0, s)
    return np.where(e > 0.0, log_p, -np.inf)


def _exact_eckart(spec, mass, e):
    vf, vr = spec.v_forward, spec.v_reverse
    a_chan = vf - vr
    hw = CONST.hbar * spec.omega_for(mass)
    denom = hw * (1.0 / math.sqrt(vf) + 1.0 / math.sqrt(vr))
    log_p = np.full(e.shape, -np.inf)
    ok = (e > 0.0) & (e > a_chan)
    if not ok.any():
        return log_p
    eo = e[ok]
    a = 4.0 * math.pi * np.sqrt(eo) / denom
    b = 4.0 * math.pi * np.sqrt(eo - a_chan) / denom
    d2 = 4.0 * vf * vr / hw**2 - 0.25
    if d2 >= 0.0:
        log_cosh_d = float(_log_cosh(2.0 * math.pi * math.sqrt(d2)))
        log_den = np.logaddexp(_log_cosh(a + b), log_cosh_d)
    else:
        cos_d = math.cos(2.0 * math.pi * math.sqrt(-d2))
        log_den = np.log(np.cosh(a + b) + cos_d)
    log_p[ok] = math.log(2.0) + _log_sinh(a) + _log_sinh(b) - log_den
    return np.minimum(log_p, 0.0)


def _exact_rectangular(spec, mass, e):
    vf, width, hbar = spec.v_forward, spec.width, CONST.hbar
    log_p = np.full(e.shape, -np.inf)
    pos = e > 0.0
    below = pos & (e < vf)
    above = pos & (e > vf)
    at_top = pos & (e == vf)
    if below.any():
        eb = e[below]
        q = np.sqrt(2.0 * mass * (vf - eb)) / hbar
        log_r = 2.0 * _log_sinh(q * width) + 2.0 * math.log(vf) - np.log(4.0 * eb * (vf - eb))
        log_p[below] = -np.logaddexp(0.0, log_r)
    if above.any():
        ea = e[above]
        q = np.sqrt(2.0 * mass * (ea - vf)) / hbar
        r = vf**2 * np.sin(q * width) ** 2 / (4.0 * ea * (ea - vf))
        log_p[above] = -np.log1p(r)
    if at_top.any():
        log_p[at_top] = -math.log1p(mass * width**2 * vf / (2.0 * hbar**2))
    return log_p


def transmission_exact(spec: BarrierSpec, mass: float, energy) -> Transmission:
    """Closed-form quantum transmission; P is continuous through the barrier top."""
    _check_mass(mass)
    e = np.atleast_1d(np.asarray(energy, dtype=float))
    if spec.shape is Shape.PARABOLIC:
        log_p = _exact_parabolic(spec, mass, e)
    elif spec.shape is Shape.ECKART:
        log_p = _exact_eckart(spec, mass, e)
    elif spec.shape is Shape.RECTANGULAR:
        log_p = _exact_rectangular(spec, mass, e)
    else:  # pragma: no cover - Shape is closed
        raise CapabilityError(f"no exact transmission for shape {spec.shape!r}")
    return _pack(log_p, energy)
