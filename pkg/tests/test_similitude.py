import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import MASS_SCALE_10KM_TO_SEA_LEVEL
from uqscale.errors import ModelError
from uqscale.models.atmosphere import isa_atmosphere
from uqscale.similitude import (
    ScaleReference,
    bending_parameter,
    mass_scale_factor,
    reynolds,
    similitude_report,
    torsion_parameter,
)

pos = st.floats(1e-3, 1e3)


def ref(**kw):
    base = dict(rho=0.4, velocity=250.0, length=3.0, ei=1e8, gj=5e7,
                reynolds=2e7, mach=0.84, l_over_d=20.0)
    base.update(kw)
    return ScaleReference(**base)


def test_mass_scale_examples():
    assert mass_scale_factor(1.0, 1.0, 1.0) == 1.0
    assert mass_scale_factor(1.0, 1.0, 0.5) == 0.125
    rho_f = isa_atmosphere(10000.0).density
    rho_s = isa_atmosphere(0.0).density
    assert mass_scale_factor(rho_f, rho_s, 0.2) == pytest.approx(0.002701, abs=1e-5)
    assert mass_scale_factor(rho_f, rho_s, 0.2) == pytest.approx(MASS_SCALE_10KM_TO_SEA_LEVEL, abs=2e-7)


def test_positive_inputs():
    with pytest.raises(ModelError):
        mass_scale_factor(1.0, 0.0, 0.2)
    with pytest.raises(ModelError):
        mass_scale_factor(1.0, 1.0, 1.5)
    with pytest.raises(ModelError):
        bending_parameter(1.0, -1.0, 1.0, 1.0)
    with pytest.raises(ModelError):
        reynolds(1.0, 1.0, 1.0, 0.0)


def test_group_examples():
    assert bending_parameter(1, 1, 1, 1) == 1.0
    assert torsion_parameter(1, 1, 1, 1) == 1.0
    assert bending_parameter(1, 1, 1, 2) == pytest.approx(1 / 16)
    assert reynolds(1, 1, 1, 1) == 1.0
    assert reynolds(1, 2, 1, 1) == 2.0


def test_matched_stiffness_ratio():
    full = ref()
    rho_s, v_s, l_s = 1.225, 286.0, 0.6
    factor = (rho_s * v_s**2 * l_s**4) / (full.rho * full.velocity**2 * full.length**4)
    sub = ref(rho=rho_s, velocity=v_s, length=l_s, ei=full.ei * factor, gj=full.gj * factor)
    rep = similitude_report(full, sub, 0.2)
    assert rep.group("S_b").ratio == pytest.approx(1.0, abs=1e-12)
    assert rep.group("S_t").ratio == pytest.approx(1.0, abs=1e-12)


def test_sea_level_reynolds_order():
    atm = isa_atmosphere(0.0)
    v = 0.86 * atm.speed_of_sound
    re = reynolds(atm.density, v, 0.2 * 3.2, atm.dynamic_viscosity)
    assert 1e6 <= re <= 1e8


def test_report_examples(tmp_path):
    full = ref()
    rep = similitude_report(full, full, 1.0)
    assert all(g.ratio == 1.0 for g in rep.groups) and rep.flagged == []
    rep = similitude_report(full, ref(ei=0.5e8), 1.0)
    assert rep.group("S_b").ratio == 0.5 and rep.flagged == ["S_b"]
    assert rep.group("S_t").ratio == 1.0 and rep.group("Re").ratio == 1.0
    rep = similitude_report(full, ref(mach=0.86), 1.0)
    assert rep.group("Ma").ratio == pytest.approx(0.86 / 0.84)
    rep.to_json(tmp_path / "s.json")
    assert "S_t" in rep.to_text() and (tmp_path / "s.json").exists()


@settings(max_examples=60, deadline=None)
@given(pos, pos, pos, pos, pos, pos, st.floats(0.1, 10), st.floats(0.1, 10), st.floats(0.1, 10))
def test_unit_rescaling(rho, v, length, ei, gj, mu, kg, m, s):
    # rescale mass, length and time units: rho ~ kg/m^3, V ~ m/s, EI ~ kg m^3/s^2
    rho2, v2, l2 = rho * kg / m**3, v * m / s, length * m
    ei2, gj2, mu2 = ei * kg * m**3 / s**2, gj * kg * m**3 / s**2, mu * kg / (m * s)
    assert bending_parameter(ei2, rho2, v2, l2) == pytest.approx(bending_parameter(ei, rho, v, length), rel=1e-12)
    assert torsion_parameter(gj2, rho2, v2, l2) == pytest.approx(torsion_parameter(gj, rho, v, length), rel=1e-12)
    assert reynolds(rho2, v2, l2, mu2) == pytest.approx(reynolds(rho, v, length, mu), rel=1e-12)


@settings(max_examples=60, deadline=None)
@given(pos, pos, pos, pos, st.floats(0.1, 10))
def test_homogeneity(ei, rho, v, length, k):
    b = bending_parameter(ei, rho, v, length)
    assert bending_parameter(ei, k * rho, v, length) == pytest.approx(b / k, rel=1e-12)
    assert bending_parameter(ei, rho, k * v, length) == pytest.approx(b / k**2, rel=1e-12)
    assert bending_parameter(ei, rho, v, k * length) == pytest.approx(b / k**4, rel=1e-12)
    t = torsion_parameter(ei, rho, v, length)
    assert torsion_parameter(ei, rho, v, k * length) == pytest.approx(t / k**4, rel=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.1, 2.0), st.floats(0.1, 2.0), st.floats(0.01, 1.0))
def test_mass_cubic(rf, rs, n):
    assert mass_scale_factor(rf, rs, n) == pytest.approx(rf / rs * n**3, rel=1e-14)
    half = mass_scale_factor(rf, rs, n / 2)
    assert mass_scale_factor(rf, rs, n) == pytest.approx(8 * half, rel=1e-12)


def test_from_result_fields():
    from uqscale.models.aerostruct import evaluate_aerostruct
    from uqscale.models.baseline import cruise_condition, wing_spec
    res = evaluate_aerostruct(wing_spec(), cruise_condition())
    r = ScaleReference.from_result(res)
    assert r.length == res.reference_length and r.ei == res.root_ei
    assert np.isfinite(r.bending()) and np.isfinite(r.torsion())
