import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from modest.errors import DomainError
from modest.exponents import ChannelSpec, awgn_reliability
from modest.jscc import (
    ExponentCurve,
    joint_exponent,
    rate_grid,
    separation_exponent,
    uniform_source_equality,
)

INF = math.inf
E_HALF = (1 - math.sqrt(0.5)) ** 2


def awgn_curve(c=1.0, hi=2.0, points=4001, knots=()):
    return ExponentCurve.awgn(c, rate_grid(0.0, hi, points, knots=(c / 4, c, *knots)))


def brute(f_curve, e_curve, lo, hi, points=200001):
    """Dense-sampling estimates of (inf F+E, sup min(F, E)) for finite curves."""
    x = np.linspace(lo, hi, points)
    f = np.interp(x, f_curve.rates, f_curve.values)
    e = np.interp(x, e_curve.rates, e_curve.values)
    return float(np.min(f + e)), float(np.max(np.minimum(f, e)))


# --- curves ---------------------------------------------------------------------


def test_curve_interpolation_and_inf():
    c = ExponentCurve((0.0, 1.0, 2.0), (1.0, 3.0, INF))
    assert c(0.5) == 2.0 and c(1.0) == 3.0 and c(1.5) == INF
    with pytest.raises(DomainError):
        c(2.5)


@pytest.mark.parametrize("rates,values", [((0.0, 0.0), (1.0, 1.0)), ((0.0, 1.0), (1.0, -1.0)),
                                          ((0.0, 1.0), (1.0,)), ((), ())])
def test_curve_validation(rates, values):
    with pytest.raises(DomainError):
        ExponentCurve(rates, values)


def test_curve_file(tmp_path):
    path = tmp_path / "f.txt"
    path.write_text("# rate value\n0 0\n0.5 0   # knee\n\n1.0 inf\n")
    c = ExponentCurve.read(path)
    assert c.rates == (0.0, 0.5, 1.0) and c.values == (0.0, 0.0, INF)
    path.write_text("0 1 2\n")
    with pytest.raises(DomainError):
        ExponentCurve.read(path)


# --- joint exponent -------------------------------------------------------------


def test_joint_step_source():
    grid = rate_grid(0.0, 2.0, 10001, knots=(0.5,))
    f = ExponentCurve.step(0.5, 2.0)
    assert joint_exponent(f, awgn_curve(knots=(0.5,)), grid) == pytest.approx(E_HALF, abs=1e-6)
    assert E_HALF == pytest.approx(0.0857864, abs=1e-7)


def test_joint_zero_source_is_min_channel():
    grid = rate_grid(0.0, 2.0, 1001)
    f = ExponentCurve((0.0, 2.0), (0.0, 0.0))
    assert joint_exponent(f, awgn_curve(), grid) == 0.0


def test_joint_single_feasible_point():
    r0 = 0.3
    f = ExponentCurve((0.0, r0, 2.0), (INF, 1.0, INF))
    grid = rate_grid(0.0, 2.0, 1001, knots=(r0,))
    e = awgn_curve(knots=(r0,))
    assert joint_exponent(f, e, grid) == pytest.approx(1.0 + awgn_reliability(1.0, r0), abs=1e-12)


def test_empty_or_foreign_grid():
    f = ExponentCurve.step(0.5, 2.0)
    with pytest.raises(DomainError):
        joint_exponent(f, awgn_curve(), [])
    with pytest.raises(DomainError):
        separation_exponent(f, awgn_curve(), np.linspace(0, 3, 10))


# --- separation exponent --------------------------------------------------------


def test_separation_step_source():
    grid = rate_grid(0.0, 2.0, 10001, knots=(0.5,))
    f = ExponentCurve.step(0.5, 2.0)
    assert separation_exponent(f, awgn_curve(knots=(0.5,)), grid) == pytest.approx(E_HALF, abs=1e-6)


def test_separation_crossing_and_strict_gap():
    # F rises 0 -> 1 and E falls 1/2 -> 0 on [0, 1]: they cross at R = 1/3
    f = ExponentCurve((0.0, 1.0), (0.0, 1.0))
    e = ExponentCurve((0.0, 1.0), (0.5, 0.0))
    grid = np.linspace(0.0, 1.0, 11)
    sep = separation_exponent(f, e, grid)
    joint = joint_exponent(f, e, grid)
    assert sep == pytest.approx(1 / 3, abs=1e-15)
    assert joint == pytest.approx(0.5, abs=1e-15)
    bj, bs = brute(f, e, 0.0, 1.0)
    assert bs == pytest.approx(sep, abs=1e-5) and bj == pytest.approx(joint, abs=1e-12)
    assert sep < joint


def test_separation_zero_channel():
    f = ExponentCurve((0.0, 2.0), (0.0, 5.0))
    e = ExponentCurve((0.0, 2.0), (0.0, 0.0))
    assert separation_exponent(f, e, np.linspace(0, 2, 101)) == 0.0


def test_ordering_needs_monotone_curves():
    # both curves rise together; the sup of the min exceeds the inf of the sum
    f = ExponentCurve((0.0, 1.0), (0.0, 5.0))
    e = ExponentCurve((0.0, 1.0), (0.0, 5.0))
    grid = np.linspace(0.0, 1.0, 5)
    assert separation_exponent(f, e, grid) == 5.0 > joint_exponent(f, e, grid) == 0.0


def monotone_curve(draw, increasing):
    n = draw(st.integers(2, 8))
    steps = draw(st.lists(st.floats(0.01, 1.0), min_size=n - 1, max_size=n - 1))
    rates = np.concatenate([[0.0], np.cumsum(steps)])
    rates = rates / rates[-1] * 2.0
    deltas = draw(st.lists(st.floats(0.0, 2.0), min_size=n - 1, max_size=n - 1))
    start = draw(st.floats(0.0, 3.0))
    values = start + np.concatenate([[0.0], np.cumsum(deltas)])
    if not increasing:
        values = values[::-1]
    if increasing and draw(st.booleans()):
        values[-1] = INF
    return ExponentCurve(tuple(rates), tuple(values))


@st.composite
def monotone_pair(draw):
    return monotone_curve(draw, True), monotone_curve(draw, False)


@given(monotone_pair(), st.integers(2, 60))
@settings(max_examples=200, deadline=None)
def test_separation_never_exceeds_joint(pair, points):
    f, e = pair
    grid = np.linspace(0.0, 2.0, points)
    assert separation_exponent(f, e, grid) <= joint_exponent(f, e, grid) + 1e-12


@given(monotone_pair())
@settings(max_examples=60, deadline=None)
def test_matches_dense_sampling(pair):
    f, e = pair
    if not all(map(math.isfinite, f.values)):
        return
    grid = np.linspace(0.0, 2.0, 7)
    bj, bs = brute(f, e, 0.0, 2.0)
    # exact extremes bound the sampled ones and sit within one sampling step of them
    assert joint_exponent(f, e, grid) <= bj + 1e-12
    assert separation_exponent(f, e, grid) >= bs - 1e-12
    assert joint_exponent(f, e, grid) == pytest.approx(bj, abs=1e-3)
    assert separation_exponent(f, e, grid) == pytest.approx(bs, abs=1e-3)


# --- step-source equality -------------------------------------------------------


@pytest.mark.parametrize("knee", [0.25, 0.5, 0.9])
def test_uniform_source_equality(knee):
    rep = uniform_source_equality(knee, ChannelSpec(1.0, 1.0))
    assert rep.equal
    assert rep.joint == pytest.approx(awgn_reliability(1.0, knee), abs=1e-6)
    assert rep.separation == pytest.approx(rep.joint, abs=1e-6)


def test_uniform_source_examples():
    rep = uniform_source_equality(0.5, 1.0, grid=rate_grid(0.0, 2.0, 10000, knots=(0.5,)))
    assert rep.joint == pytest.approx(0.0857864, abs=1e-6)
    assert rep.separation == pytest.approx(0.0857864, abs=1e-6)
    assert uniform_source_equality(0.25, 1.0).joint == pytest.approx(0.25, abs=1e-12)
    near = uniform_source_equality(0.999, 1.0)
    assert near.joint < 1e-6 and near.separation < 1e-6


def test_uniform_source_validation():
    with pytest.raises(DomainError):
        uniform_source_equality(1.2, 1.0)
