import math

import numpy as np
import pytest

from modest.errors import DomainError
from modest.exponents import (
    BandSpec,
    ChannelSpec,
    FadingSpec,
    awgn_reliability,
    awgn_reliability_flagged,
    critical_dimension,
    critical_rate,
    fading_reliability,
    fading_zero_rate_value,
    moment_bound_exponent,
    outage_probability,
    sphere_packing_exponent,
    strong_converse,
)

UNIT = ChannelSpec(1.0, 1.0)


def craig_closed_form(k):
    return 0.5 * (1.0 - math.sqrt(k / (k + 1.0)))


# --- reliability function -------------------------------------------------------


def test_awgn_examples():
    assert awgn_reliability(UNIT, 0.1) == pytest.approx(0.4, abs=1e-15)
    assert awgn_reliability(UNIT, 0.25) == pytest.approx(0.25, abs=1e-15)
    assert (1 - math.sqrt(0.25)) ** 2 == pytest.approx(0.25)
    assert awgn_reliability(UNIT, 1 / 6) == pytest.approx(1 / 3, abs=1e-15)
    assert awgn_reliability(UNIT, 1 / 6) == pytest.approx(2 / 6, abs=1e-15)
    flagged = awgn_reliability_flagged(UNIT, 1.2)
    assert flagged.value == 0.0 and flagged.strong_converse


def test_awgn_flag_distinguishes_capacity_from_above():
    assert awgn_reliability(UNIT, 1.0) == 0.0
    assert not strong_converse(UNIT, 1.0)
    assert strong_converse(UNIT, 1.0 + 1e-9)


def test_awgn_accepts_bare_capacity_and_scales():
    ch = ChannelSpec(power=3.0, n0=2.0)
    assert ch.capacity == 1.5
    assert awgn_reliability(ch, 0.2) == awgn_reliability(1.5, 0.2)
    assert ChannelSpec.from_capacity(2.0).energy(4.0) == 8.0


def test_awgn_negative_rate():
    with pytest.raises(DomainError):
        awgn_reliability(UNIT, -0.1)


@pytest.mark.parametrize("kwargs", [dict(power=0.0), dict(power=1.0, n0=-1.0)])
def test_channel_validation(kwargs):
    with pytest.raises(DomainError):
        ChannelSpec(**kwargs)


@pytest.mark.parametrize("c", [0.5, 1.0, 3.0])
def test_awgn_shape(c):
    r = np.linspace(0, c, 1001)
    e = np.array([awgn_reliability(c, x) for x in r])
    assert e[0] == c / 2 and e[-1] == 0.0
    assert np.max(np.abs(np.diff(e))) < 2 * c / 1000
    assert np.all(np.diff(e) <= 1e-15)
    assert np.all(e[:-2] - 2 * e[1:-1] + e[2:] >= -1e-12)
    h = 1e-6
    for x in (0.05 * c, 0.15 * c, 0.2 * c):
        slope = (awgn_reliability(c, x + h) - awgn_reliability(c, x - h)) / (2 * h)
        assert slope == pytest.approx(-1.0, abs=1e-8)


# --- fading ---------------------------------------------------------------------


def test_fading_examples():
    assert fading_reliability(2.0, UNIT, 0.5) == pytest.approx(1.5)
    assert fading_reliability(0.6, UNIT, 0.5) == 0.0


def test_fading_unit_gain_is_awgn():
    for c in (0.7, 1.0, 2.5):
        for r in np.linspace(0, 1.3 * c, 100):
            assert fading_reliability(1.0, c, r) == pytest.approx(awgn_reliability(c, r), abs=1e-14)


def test_fading_is_gain_scaled_awgn():
    # E_a(R) at capacity C equals E(R) at capacity a^2 C
    for a in (0.3, 0.9, 1.7):
        for r in (0.05, 0.3, 0.8):
            assert fading_reliability(a, UNIT, r) == pytest.approx(awgn_reliability(a * a, r), abs=1e-14)


def test_fading_validation():
    with pytest.raises(DomainError):
        fading_reliability(-1.0, UNIT, 0.1)
    with pytest.raises(DomainError):
        FadingSpec(0.0, UNIT)
    assert FadingSpec(2.0, UNIT).mean_capacity == 4.0


# --- band-limited ---------------------------------------------------------------


def test_sp_at_critical_rate_has_unit_rho():
    for w in (0.5, 1.0, 3.0):
        band = BandSpec(w, UNIT)
        _, rho = sphere_packing_exponent(band, critical_rate(band))
        assert rho == pytest.approx(1.0, abs=1e-6)


def test_sp_wide_band_limit():
    band = BandSpec(1e4, UNIT)
    value, _ = sphere_packing_exponent(band, 0.5)
    assert value == pytest.approx((1 - math.sqrt(0.5)) ** 2, rel=0.01)
    assert value == pytest.approx(0.0857761, abs=1e-6)


@pytest.mark.parametrize("w", [0.3, 1.0, 10.0])
def test_sp_zero_at_band_capacity(w):
    band = BandSpec(w, UNIT)
    for r in (band.capacity, 1.5 * band.capacity):
        assert sphere_packing_exponent(band, r) == (0.0, 0.0)


def test_sp_non_increasing_in_rate():
    band = BandSpec(2.0, UNIT)
    vals = [sphere_packing_exponent(band, r)[0] for r in np.linspace(0.01, band.capacity, 60)]
    assert np.all(np.diff(vals) <= 1e-12)


def test_sp_rejects_zero_rate():
    with pytest.raises(DomainError):
        sphere_packing_exponent(BandSpec(1.0, UNIT), 0.0)


def test_critical_rate_examples():
    assert critical_rate(BandSpec(1.0, UNIT)) == pytest.approx(math.log(1.5) - 1 / 6, abs=1e-15)
    assert critical_rate(BandSpec(1.0, UNIT)) == pytest.approx(0.2387977, abs=1e-6)
    assert critical_rate(BandSpec(1e4, UNIT)) == pytest.approx(0.25, rel=0.01)


def test_critical_rate_below_capacity_sweep():
    for w in np.geomspace(1e-2, 1e4, 25):
        for s in (0.1, 1.0, 10.0):
            for n0 in (0.5, 1.0, 2.0):
                band = BandSpec(w, ChannelSpec(s, n0))
                assert 0 < critical_rate(band) < s / n0
                assert critical_rate(band) < band.capacity


# --- moment exponent ------------------------------------------------------------


def test_moment_examples():
    assert moment_bound_exponent(UNIT, 2.0) == pytest.approx((0.0, 0.5), abs=1e-12)
    r, v = moment_bound_exponent(UNIT, 0.5)
    assert r == pytest.approx(4 / 9, abs=1e-6)
    assert v == pytest.approx(1 / 3, abs=1e-6)


@pytest.mark.parametrize("alpha", np.round(np.arange(0.1, 1.0, 0.1), 1))
@pytest.mark.parametrize("c", [0.5, 1.0, 2.0])
def test_moment_closed_form(alpha, c):
    r, v = moment_bound_exponent(c, alpha)
    assert r == pytest.approx(c / (1 + alpha) ** 2, abs=1e-6)
    assert v == pytest.approx(alpha * c / (1 + alpha), abs=1e-6)


@pytest.mark.parametrize("alpha", [1.0, 1.5, 2.0, 5.0])
def test_moment_large_order(alpha):
    assert moment_bound_exponent(UNIT, alpha) == pytest.approx((0.0, 0.5), abs=1e-12)


def test_moment_validation():
    with pytest.raises(DomainError):
        moment_bound_exponent(UNIT, 0.0)


# --- critical dimension and outage ----------------------------------------------


@pytest.mark.parametrize("rate,expected", [(0.3, 3), (0.5, 2), (1.5, 0), (0.25, 4)])
def test_critical_dimension(rate, expected):
    assert critical_dimension(UNIT, rate) == expected


def test_critical_dimension_validation():
    with pytest.raises(DomainError):
        critical_dimension(UNIT, 0.0)


def test_outage_examples():
    fading = FadingSpec(1.0, UNIT)
    assert outage_probability(fading, 0.0) == 0.0
    assert outage_probability(fading, 0.5) == pytest.approx(0.2211992, abs=1e-7)
    assert outage_probability(fading, 1e4) == 1.0


def test_outage_monotone():
    rates = np.linspace(0.01, 5, 50)
    p = [outage_probability(FadingSpec(1.0, UNIT), r) for r in rates]
    assert np.all(np.diff(p) > 0)
    p = [outage_probability(FadingSpec(s, UNIT), 0.5) for s in np.linspace(0.2, 3, 50)]
    assert np.all(np.diff(p) < 0)
    with pytest.raises(DomainError):
        outage_probability(FadingSpec(1.0, UNIT), -1.0)


# --- Craig integral -------------------------------------------------------------


def test_craig_example():
    v = fading_zero_rate_value(FadingSpec(1.0, UNIT), 10.0)
    assert v.value == pytest.approx(craig_closed_form(10.0), abs=1e-10)
    assert v.value == pytest.approx(0.0232687, abs=5e-7)


@pytest.mark.parametrize("k", [1e-3, 0.5, 1.0, 10.0, 100.0, 1e4, 1e6])
def test_craig_closed_form_and_sandwich(k):
    v = fading_zero_rate_value(FadingSpec(1.0, UNIT), k)
    assert v.value == pytest.approx(craig_closed_form(k), abs=1e-10)
    assert v.lower <= v.value <= v.upper
    assert v.lower == pytest.approx(1 / (4 * (k + 1))) and v.upper == pytest.approx(1 / (4 * k))


def test_craig_scales_with_mean_capacity():
    a = fading_zero_rate_value(FadingSpec(2.0, UNIT), 2.5).value
    b = fading_zero_rate_value(FadingSpec(1.0, UNIT), 10.0).value
    assert a == pytest.approx(b, abs=1e-14)


def test_craig_algebraic_decay():
    v = fading_zero_rate_value(FadingSpec(1.0, UNIT), 1e6).value
    assert 4e6 * v == pytest.approx(1.0, abs=1e-5)
