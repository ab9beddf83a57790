import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from aoimarkov.core import InvalidParameterError, SecondOrderStats
from aoimarkov.moments import (
    aoi_moment,
    aoi_moment_closed,
    bernoulli_numbers,
    faulhaber_coefficients,
    faulhaber_sum,
    ig_interdelivery_moment,
)


def test_bernoulli_small_values():
    b = bernoulli_numbers(6)
    assert b[0] == 1
    assert abs(b[1]) == Fraction(1, 2)
    assert b[2] == Fraction(1, 6)
    assert b[3] == 0
    assert b[4] == Fraction(-1, 30)
    assert b[5] == 0
    assert b[6] == Fraction(1, 42)


def test_bernoulli_odd_vanish_and_lowest_terms():
    b = bernoulli_numbers(30)
    assert all(b[k] == 0 for k in range(3, 31, 2))
    assert b[30] == Fraction(8615841276005, 14322)
    assert all(isinstance(x, Fraction) and x.denominator > 0 for x in b)


def test_bernoulli_rejects_negative():
    with pytest.raises(InvalidParameterError):
        bernoulli_numbers(-1)


def test_faulhaber_examples():
    assert faulhaber_sum(3, 2) == 14
    assert faulhaber_sum(5, 3) == 225
    assert faulhaber_sum(100, 6) == sum(k**6 for k in range(1, 101))


def test_faulhaber_exhaustive_l200_z8():
    for z in range(1, 9):
        total = 0
        for l in range(1, 201):
            total += l**z
            assert faulhaber_sum(l, z) == total


def test_faulhaber_coefficients_z2():
    c = faulhaber_coefficients(2)
    assert c == {3: Fraction(1, 3), 2: Fraction(1, 2), 1: Fraction(1, 6)}


@pytest.mark.parametrize("l, z", [(0, 1), (3, 0)])
def test_faulhaber_rejects(l, z):
    with pytest.raises(InvalidParameterError):
        faulhaber_sum(l, z)


def test_ig_examples():
    assert ig_interdelivery_moment(0.25, 0.7, 1) == 4.0
    assert ig_interdelivery_moment(0.25, 0.1875, 2) == pytest.approx(28.0, rel=1e-14)
    assert ig_interdelivery_moment(0.5, 0.0, 3) == 8.0


def test_ig_matches_textbook_inverse_gaussian_moments():
    # IG(mu, shape) with mu = 1/m, shape = 1/v2 (first hitting time of drift m, variance v2 at level 1)
    m, v2 = 0.3, 0.4
    mu, shape = 1 / m, 1 / v2
    assert ig_interdelivery_moment(m, v2, 2) == pytest.approx(mu**2 + mu**3 / shape, rel=1e-13)
    third = mu**3 + 3 * mu**4 / shape + 3 * mu**5 / shape**2
    assert ig_interdelivery_moment(m, v2, 3) == pytest.approx(third, rel=1e-13)


def test_ig_log_space_branch_continuous():
    # k > 20 switches weight arithmetic; compare against exact integers
    m, v2 = 0.8, 0.05
    for k in (21, 25):
        exact = sum(
            Fraction(math.factorial(k - 1 + j), math.factorial(j) * math.factorial(k - 1 - j))
            * Fraction(v2 / (2 * m)) ** j
            for j in range(k)
        )
        assert ig_interdelivery_moment(m, v2, k) == pytest.approx(float(exact) / m**k, rel=1e-10)


def test_ig_rejects():
    with pytest.raises(InvalidParameterError):
        ig_interdelivery_moment(0.0, 0.1, 2)
    with pytest.raises(InvalidParameterError):
        ig_interdelivery_moment(0.5, -0.1, 2)
    with pytest.raises(InvalidParameterError):
        ig_interdelivery_moment(0.5, 0.1, 0)


@given(st.floats(0.001, 1.0), st.floats(0.0, 5.0))
def test_first_gap_moment_is_inverse_mean(m, v2):
    assert ig_interdelivery_moment(m, v2, 1) * m == pytest.approx(1.0, rel=1e-15)


def test_aoi_moment_examples():
    st_ = SecondOrderStats(0.25, 0.1875)
    assert aoi_moment(st_, 1) == pytest.approx(4.0, rel=1e-14)
    assert aoi_moment_closed(st_, 1) == pytest.approx(4.0, rel=1e-14)
    assert aoi_moment(SecondOrderStats(1.0, 0.0), 5) == pytest.approx(1.0, rel=1e-14)
    assert aoi_moment_closed(SecondOrderStats(0.5, 0.25), 1) == pytest.approx(2.0, rel=1e-14)
    m, v = 0.25, 0.1875
    closed2 = v**2 / m**4 + v / m**3 + (3 * v + 2) / (6 * m**2) + 1 / (2 * m) + 1 / 6
    assert aoi_moment(st_, 2) == pytest.approx(closed2, rel=1e-12)


def test_deterministic_renewal_matches_exact_age_average():
    # gaps of exactly L slots: AoI cycles through 1..L
    for L in (1, 2, 4, 10):
        for z in (1, 2, 3, 4):
            exact = sum(a**z for a in range(1, L + 1)) / L
            assert aoi_moment(SecondOrderStats(1 / L, 0.0), z) == pytest.approx(exact, rel=1e-12)


def _grid50():
    for m in np.linspace(0.02, 1.0, 10):
        for ratio in np.linspace(0.0, 3.0, 5):
            yield SecondOrderStats(float(m), float(ratio * m * m))


def test_general_equals_closed_forms_on_50_point_grid():
    pts = list(_grid50())
    assert len(pts) == 50
    for st_ in pts:
        for z in (1, 2):
            assert aoi_moment(st_, z) == pytest.approx(aoi_moment_closed(st_, z), rel=1e-12)


def test_closed_form_rejects_higher_orders():
    with pytest.raises(InvalidParameterError):
        aoi_moment_closed(SecondOrderStats(0.5, 0.1), 3)


@settings(max_examples=80)
@given(st.floats(0.01, 1.0), st.floats(0.0, 4.0), st.integers(1, 6))
def test_moment_at_least_one_and_jensen(m, ratio, z):
    st_ = SecondOrderStats(m, ratio * m * m)
    assert aoi_moment(st_, z) >= 1.0 - 1e-12
    assert aoi_moment(st_, 2) >= aoi_moment(st_, 1) ** 2 * (1 - 1e-12)


@settings(max_examples=80)
@given(st.floats(0.02, 1.0), st.floats(0.5, 0.999), st.floats(0.0, 3.0), st.floats(0.0, 1.0), st.integers(1, 4))
def test_monotone_in_inverse_mean_and_normalised_variance(m, shrink, ratio, extra, z):
    # smaller m at fixed v^2/m^2 never lowers the moment
    lo_m, hi_m = m * shrink, m
    assert aoi_moment(SecondOrderStats(lo_m, ratio * lo_m**2), z) >= aoi_moment(
        SecondOrderStats(hi_m, ratio * hi_m**2), z
    ) * (1 - 1e-12)
    # larger v^2/m^2 at fixed m never lowers the moment
    assert aoi_moment(SecondOrderStats(m, (ratio + extra) * m * m), z) >= aoi_moment(
        SecondOrderStats(m, ratio * m * m), z
    ) * (1 - 1e-12)


def test_concurrent_bernoulli_lookup():
    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(8) as pool:
        results = list(pool.map(bernoulli_numbers, [40] * 32))
    assert all(r == results[0] for r in results)
