import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tunnelphase import physics as phys
from tunnelphase.constants import CONST, MASS_H_AMU, amu_to_kg, kjmol_to_joule
from tunnelphase.errors import DomainError, SpecificationError

M_H = amu_to_kg(MASS_H_AMU)


def eckart(vf=80.0, vr=60.0, w=1000.0):
    return phys.BarrierSpec.from_external("eckart", vf, vr, w)


def parabolic(vf=50.0, w=1000.0):
    return phys.BarrierSpec.from_external("parabolic", vf, vf, w)


def test_spec_validation():
    with pytest.raises(SpecificationError):
        phys.BarrierSpec.from_external("eckart", 50.0, 60.0, 1000.0)
    with pytest.raises(SpecificationError):
        phys.BarrierSpec.from_external("eckart", 50.0, 40.0, 0.0)
    with pytest.raises(SpecificationError):
        phys.BarrierSpec.from_external("rectangular", 50.0, 50.0, width_angstrom=0.0)
    assert eckart(100.0, 60.0).eta == pytest.approx(0.4)


def test_eckart_asymptotes_and_symmetry():
    spec = eckart()
    L = spec.length_scale
    assert phys.potential(spec, -60 * L) == pytest.approx(0.0, abs=1e-20 * spec.v_forward)
    assert phys.potential(spec, 60 * L) == pytest.approx(spec.v_forward - spec.v_reverse, rel=1e-12)
    assert phys.potential(spec, 0.0) == pytest.approx(spec.v_forward, rel=1e-14)
    sym = eckart(80.0, 80.0)
    d = np.linspace(0.1, 5, 20) * sym.length_scale
    np.testing.assert_allclose(phys.potential(sym, d), phys.potential(sym, -d), rtol=1e-13)


@pytest.mark.parametrize("vf,vr,w", [(60.0, 60.0, 600.0), (140.0, 70.0, 1600.0), (100.0, 90.0, 1000.0)])
def test_eckart_top_curvature(vf, vr, w):
    spec = eckart(vf, vr, w)
    # Richardson-extrapolated central differences around the maximum
    def d2(h):
        v = phys.potential(spec, np.array([-h, 0.0, h]))
        return (v[0] - 2 * v[1] + v[2]) / h**2

    h = 1e-13
    est = (16 * d2(h / 2) - d2(h)) / 15
    want = -spec.ref_mass * spec.omega_imag**2
    assert est == pytest.approx(want, rel=1e-6)


def test_turning_points():
    rect = phys.BarrierSpec.from_external("rectangular", 50.0, 50.0, width_angstrom=0.5)
    tp = phys.turning_points(rect, 0.3 * rect.v_forward)
    assert (tp.x1, tp.x2) == (0.0, rect.width)

    par = parabolic()
    gaps = [phys.turning_points(par, par.v_forward * (1 - eps)) for eps in (1e-2, 1e-4, 1e-6)]
    widths = [g.x2 - g.x1 for g in gaps]
    assert widths[0] > widths[1] > widths[2] > 0
    assert widths[2] < 1e-2 * par.half_width

    sym = eckart(80.0, 80.0)
    tp = phys.turning_points(sym, 0.5 * sym.v_forward)
    assert tp.x1 == pytest.approx(-tp.x2, rel=1e-11)
    for x in tp:
        assert phys.potential(sym, x) == pytest.approx(0.5 * sym.v_forward, rel=1e-11)

    with pytest.raises(DomainError):
        phys.turning_points(sym, 1.2 * sym.v_forward)
    asym = eckart(80.0, 50.0)
    with pytest.raises(DomainError):
        phys.turning_points(asym, 0.2 * asym.v_forward)


def test_wkb_examples():
    spec = eckart()
    assert phys.transmission_wkb(spec, M_H, spec.v_forward).p == 1.0
    assert phys.transmission_wkb(spec, M_H, 1.3 * spec.v_forward).p == 1.0
    e = 0.6 * spec.v_forward
    ratio = phys.transmission_wkb(spec, 4 * M_H, e).log_p / phys.transmission_wkb(spec, M_H, e).log_p
    assert ratio == pytest.approx(2.0, rel=1e-9)


def test_rectangular_closed_form():
    width = 0.5e-10
    vf = kjmol_to_joule(60.0)
    spec = phys.BarrierSpec(phys.Shape.RECTANGULAR, vf, vf, width=width)
    e = vf - kjmol_to_joule(50.0)
    exponent = 2 * width * math.sqrt(2 * M_H * (vf - e)) / CONST.hbar
    t = phys.transmission_wkb(spec, M_H, e)
    assert t.log_p == pytest.approx(-exponent, rel=1e-10)
    assert t.p == pytest.approx(1.36e-7, rel=0.02)


def test_exact_examples():
    par = parabolic()
    assert phys.transmission_exact(par, M_H, par.v_forward).p == pytest.approx(0.5, rel=1e-14)
    for spec in (par, eckart(), phys.BarrierSpec.from_external("rectangular", 50.0, 50.0, width_angstrom=0.5)):
        lo = max(spec.floor, 0.0)
        p = phys.transmission_exact(spec, M_H, lo + 1e-6 * spec.v_forward).p
        assert p < 1e-6


def test_eckart_exact_vs_wkb_deep():
    spec = eckart(100.0, 80.0, 1200.0)
    e = np.linspace(0.25, 0.8, 25) * spec.v_forward
    ex = phys.transmission_exact(spec, M_H, e).log_p
    wkb = phys.transmission_wkb(spec, M_H, e).log_p
    deep = ex <= math.log(1e-4)
    assert deep.sum() > 5
    np.testing.assert_array_less(np.abs(ex[deep] - wkb[deep]), 0.05 * np.abs(ex[deep]))


def test_exact_continuous_through_top():
    spec = eckart()
    e = spec.v_forward * np.array([1 - 1e-9, 1.0, 1 + 1e-9])
    p = phys.transmission_exact(spec, M_H, e).p
    assert np.ptp(p) < 1e-6


def test_parabolic_wkb_matches_kemble():
    spec = parabolic(60.0, 1200.0)
    hw = CONST.hbar * spec.omega_for(M_H)
    e = np.linspace(0.1, 0.9, 30) * spec.v_forward
    kemble = -np.log1p(np.exp(2 * np.pi * (spec.v_forward - e) / hw))
    wkb = phys.transmission_wkb(spec, M_H, e).log_p
    sel = kemble <= math.log(1e-3)
    np.testing.assert_array_less(np.abs(wkb[sel] - kemble[sel]), 0.01 * np.abs(kemble[sel]))


def test_rectangular_action_random():
    rng = np.random.default_rng(11)
    for _ in range(100):
        vf = kjmol_to_joule(rng.uniform(10, 150))
        width = rng.uniform(0.2, 2.0) * 1e-10
        spec = phys.BarrierSpec(phys.Shape.RECTANGULAR, vf, vf, width=width)
        m = amu_to_kg(rng.uniform(1, 3))
        e = rng.uniform(0.01, 0.99) * vf
        assert phys.action(spec, m, e) == pytest.approx(math.sqrt(2 * m * (vf - e)) * width, rel=1e-10)


shapes = st.sampled_from(["eckart", "parabolic", "rectangular"])


@settings(max_examples=60, deadline=None)
@given(
    shape=shapes,
    vf=st.floats(20.0, 200.0),
    eta=st.floats(0.0, 0.6),
    w=st.floats(400.0, 2500.0),
    width=st.floats(0.2, 2.0),
    mass=st.floats(1.0, 3.0),
    frac=st.floats(0.0, 2.0),
)
def test_probability_bounds_property(shape, vf, eta, w, width, mass, frac):
    spec = phys.BarrierSpec.from_external(shape, vf, vf * (1 - eta), w, width)
    m = amu_to_kg(mass)
    e = frac * spec.v_forward
    for fn in (phys.transmission_wkb, phys.transmission_semiclassical, phys.transmission_exact):
        p = fn(spec, m, e).p
        assert 0.0 <= p <= 1.0


@settings(max_examples=30, deadline=None)
@given(vf=st.floats(30.0, 150.0), eta=st.floats(0.0, 0.5), w=st.floats(500.0, 2000.0))
def test_wkb_monotone_property(vf, eta, w):
    spec = phys.BarrierSpec.from_external("eckart", vf, vf * (1 - eta), w)
    lo = max(spec.floor, 0.0)
    e = lo + (spec.v_forward - lo) * np.linspace(0.02, 0.98, 15)
    lp = phys.transmission_wkb(spec, M_H, e).log_p
    assert np.all(np.diff(lp) >= 0)
    heavier = phys.transmission_wkb(spec, 2 * M_H, e).log_p
    assert np.all(heavier < lp)
