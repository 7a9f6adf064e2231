import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mgplan.errors import DomainError
from mgplan.resources import (CostModel, SolarArrayModel, WindTurbineCurve, annualize,
                              capacity_factor, crf, power_at_hub_speed, solar_power,
                              wind_power)

CURVE = WindTurbineCurve()


@pytest.mark.parametrize("y, expected", [(15, 0.098), (30, 0.067)])
def test_crf_stated_values(y, expected):
    assert abs(crf(0.053, y) - expected) <= 0.001


@pytest.mark.parametrize("i", [0.01, 0.053, 0.2])
def test_crf_single_year(i):
    assert crf(i, 1) == pytest.approx(1 + i, rel=1e-12)


@given(st.floats(0.001, 0.3), st.integers(1, 80))
def test_annuity_identity(i, y):
    pv = sum((1 + i) ** -k for k in range(1, y + 1))
    assert abs(crf(i, y) * pv - 1.0) <= 1e-9


@given(st.floats(0.001, 0.3), st.integers(1, 79))
def test_crf_decreases_with_lifetime(i, y):
    assert crf(i, y + 1) < crf(i, y)


def test_crf_tends_to_rate():
    assert crf(0.053, 2000) == pytest.approx(0.053, rel=1e-9)


@pytest.mark.parametrize("rate", [0.0, -0.01])
def test_crf_rejects_nonpositive_rate(rate):
    with pytest.raises(DomainError):
        crf(rate, 10)


@pytest.mark.parametrize("capital, years, expected", [
    (0.98e6, 15, 96_040), (0.84e6, 30, 56_280), (1.21e6, 30, 81_070)])
def test_annualize_per_mw(capital, years, expected):
    got = annualize(CostModel(capital, 0.053, years), 1.0)
    assert abs(got - expected) / expected <= 0.01


def test_annualize_scales_with_capacity():
    cm = CostModel(1.21e6, 0.053, 30)
    assert annualize(cm, 1.8) == pytest.approx(1.8 * annualize(cm, 1.0), rel=1e-12)


@pytest.mark.parametrize("v, kw", [(3.0, 0.0), (12.0, 1800.0), (26.0, 0.0), (25.0, 0.0),
                                   (20.0, 1800.0), (4.0, 0.0)])
def test_power_curve_points(v, kw):
    assert power_at_hub_speed(v, CURVE) == pytest.approx(kw, abs=1e-9)


def test_power_curve_cubic_segment():
    assert power_at_hub_speed(8.0, CURVE) == pytest.approx(1800 * 448 / 1664, rel=1e-12)


def test_linear_interpolation_mode():
    curve = WindTurbineCurve(interpolation="linear")
    assert power_at_hub_speed(8.0, curve) == pytest.approx(900.0, rel=1e-12)


def test_shear_extrapolation():
    # a 10 m reading scaled by (80/10)^(1/7) lands exactly on rated speed
    v10 = 12.0 / 8.0 ** (1 / 7)
    assert wind_power(v10 + 1e-9, CURVE) == pytest.approx(1800.0)


def test_power_curve_monotone_and_continuous_at_rated():
    v = np.linspace(0, 24.999, 5001)
    p = power_at_hub_speed(v, CURVE)
    assert np.all(np.diff(p) >= -1e-12)
    assert power_at_hub_speed(12.0 - 1e-9, CURVE) == pytest.approx(1800.0, abs=1e-5)
    assert np.all(power_at_hub_speed(np.linspace(25, 60, 50), CURVE) == 0.0)


def test_negative_wind_rejected():
    with pytest.raises(DomainError):
        wind_power(-1.0, CURVE)


def test_curve_invariants():
    with pytest.raises(DomainError):
        WindTurbineCurve(cut_in=12.0, rated_speed=12.0)
    with pytest.raises(DomainError):
        SolarArrayModel(efficiency=0.0)


@pytest.mark.parametrize("g, kw", [(0.0, 0.0), (900.0, 1800.0), (450.0, 900.0), (1200.0, 1800.0)])
def test_solar_points(g, kw):
    assert solar_power(g, SolarArrayModel()) == pytest.approx(kw)


@given(st.floats(0, 2000), st.floats(0, 2000))
def test_solar_lipschitz(g1, g2):
    m = SolarArrayModel()
    scale = m.efficiency * m.area / 1000.0
    assert abs(solar_power(g1, m) - solar_power(g2, m)) <= scale * abs(g1 - g2) + 1e-9
    assert solar_power(g1, m) <= m.rated_power


def test_capacity_factor():
    assert capacity_factor(np.ones(8760)) == 1.0
    assert capacity_factor(np.zeros(8760)) == 0.0
    assert capacity_factor(np.r_[np.ones(4380), np.zeros(4380)]) == 0.5
    with pytest.raises(DomainError):
        capacity_factor([1.5])
    assert math.isclose(capacity_factor([0.25, 0.75]), 0.5)
