import math
from fractions import Fraction

import numpy as np
import pytest

from aoimarkov.core import InvalidParameterError, NetworkConfig, combine, params_from_lambda_theta, params_from_rs
from aoimarkov.moments import aoi_moment
from aoimarkov.optimize import (
    cubic_alpha,
    cubic_beta,
    cubic_roots,
    grid_search_oracle,
    h_active,
    h_passive,
    line_search_grid,
    objective,
    objective_grid,
    optimize_theorem3,
    silent_after_transmit,
)
from aoimarkov.second_order import (
    active_stats,
    active_temporal_variance,
    passive_stats,
    passive_temporal_variance,
)


def test_objective_composition():
    cfg = NetworkConfig(N=7, C=2, z=1, w=1.0)
    p = params_from_lambda_theta(1 / 7, -1 / 6)
    mom = objective(cfg, p)
    assert mom.objective == pytest.approx(aoi_moment(active_stats(p, 7), 1), rel=1e-12)
    cfg = NetworkConfig(N=7, C=2, z=1, w=0.5)
    p = params_from_rs(1 / 7, 6 / 7)
    mom = objective(cfg, p)
    expected = 0.5 * aoi_moment(active_stats(p, 7), 1) + 0.5 * aoi_moment(passive_stats(p, 2, 7), 1)
    assert math.isfinite(mom.objective)
    assert mom.objective == pytest.approx(expected, rel=1e-12)
    assert mom.active_moment >= 1 and mom.passive_moment >= 1


def test_objective_degenerate_conventions():
    silent = params_from_rs(0.0, 1.0)
    assert objective(NetworkConfig(N=7, C=2, w=0.0), silent).objective == 1.0
    assert objective(NetworkConfig(N=7, C=2, w=0.3), silent).objective == math.inf
    jammed = params_from_rs(1.0, 0.0)
    assert objective(NetworkConfig(N=7, C=2, w=0.0), jammed).objective == math.inf


def test_line_search_grid_includes_endpoint():
    grid = line_search_grid(7, 0.01)
    assert grid[0] == pytest.approx(0.01)
    assert grid[-1] == 1 / 7
    assert len(grid) == 15
    assert line_search_grid(5, 0.05)[-1] == 0.2
    assert len(line_search_grid(5, 0.05)) == 4


@pytest.mark.parametrize("precision", [0.0, -0.1, 0.5])
def test_line_search_rejects(precision):
    with pytest.raises(InvalidParameterError):
        optimize_theorem3(NetworkConfig(N=7, C=2), precision)


@pytest.mark.parametrize("z, w", [(1, 1.0), (1, 0.5), (2, 1.0), (2, 0.5)])
def test_optimize_is_argmin_of_trace(z, w):
    res = optimize_theorem3(NetworkConfig(N=7, C=2, z=z, w=w), 0.01)
    values = [f for _, f in res.search_trace]
    assert res.objective_value == min(values)
    assert 0 < res.lambda_star <= 1 / 7
    assert res.s_star == 1.0
    assert res.r_star == pytest.approx(res.lambda_star / (1 - res.lambda_star), rel=1e-15)
    # first minimum wins ties
    assert values.index(min(values)) == [lam for lam, _ in res.search_trace].index(res.lambda_star)


def test_passive_only_prefers_smallest_rate():
    res = optimize_theorem3(NetworkConfig(N=7, C=2, z=1, w=0.0), 0.01)
    values = [f for _, f in res.search_trace]
    assert res.lambda_star == pytest.approx(0.01)
    assert all(b > a for a, b in zip(values, values[1:]))


def test_frozen_line_search_values():
    # values obtained from this implementation and cross-checked against the
    # grid oracle and simulation; guard against silent regressions
    cases = {
        (1, 0.5): (0.10, 11.0770989314),
        (1, 1.0): (0.14, 16.8224732683),
    }
    for (z, w), (lam, f) in cases.items():
        res = optimize_theorem3(NetworkConfig(N=7, C=2, z=z, w=w), 0.01)
        assert res.lambda_star == pytest.approx(lam)
        assert res.objective_value == pytest.approx(f, rel=1e-9)


def test_grid_oracle_finds_silent_after_transmit():
    cfg = NetworkConfig(N=7, C=2, z=1, w=0.5)
    params, f = grid_search_oracle(cfg, 0.02)
    assert params.s == 1.0
    res = optimize_theorem3(cfg, 0.01)
    assert abs(f - res.objective_value) <= res.cell_variation()


def test_grid_oracle_outside_hypothesis_runs():
    params, f = grid_search_oracle(NetworkConfig(N=2, C=1, z=1, w=1.0), 0.05)
    assert math.isfinite(f) and f >= 1


def test_grid_rejects_bad_step():
    with pytest.raises(InvalidParameterError):
        grid_search_oracle(NetworkConfig(N=7, C=2), 0.6)
    with pytest.raises(InvalidParameterError):
        objective_grid(NetworkConfig(N=7, C=2), 0.0)


def test_objective_grid_marks_alternating_corner():
    axis, values = objective_grid(NetworkConfig(N=7, C=2), 0.25)
    assert axis[-1] == 1.0
    assert values[-1, -1] == math.inf
    assert np.isfinite(values[:-1, :]).all()


@pytest.mark.parametrize("N, C", [(7, 2), (8, 1), (10, 3)])
def test_rates_above_one_over_n_never_win(N, C):
    for z in (1, 2):
        for w in (0.0, 0.5, 1.0):
            cfg = NetworkConfig(N=N, C=C, z=z, w=w)
            best = optimize_theorem3(cfg, 0.01).objective_value
            for delta in np.arange(0.01, 0.105, 0.01):
                lam = 1 / N + delta
                if lam > 0.5:
                    continue
                assert objective(cfg, silent_after_transmit(lam)).objective >= best


@pytest.mark.parametrize("N, C", [(7, 2), (9, 1)])
def test_variance_nondecreasing_in_theta_below_roots(N, C):
    roots = cubic_roots(C, N)
    h = 1e-6
    for lam in np.linspace(0.02, min(roots.alpha, roots.beta) - 0.01, 5):
        lo = -lam / (1 - lam)
        for theta in np.linspace(lo + 2 * h, 0.9, 15):
            def va(t):
                return active_temporal_variance(params_from_lambda_theta(lam, t), N)

            def vp(t):
                return passive_temporal_variance(params_from_lambda_theta(lam, t), C, N)

            assert (va(theta + h) - va(theta - h)) / (2 * h) >= -1e-6
            assert (vp(theta + h) - vp(theta - h)) / (2 * h) >= -1e-6


def test_cubic_exact_signs():
    assert h_active(7, Fraction(1, 7)) == Fraction(76, 343)
    assert h_passive(14, Fraction(1, 7)) == Fraction(46, 343)
    for N in range(2, 60):
        assert h_active(N, Fraction(1)) == -2 * N
        # exact: -(N+8)/8 - (N-13)/4 - 3 + 1 = -3N/8 + 1/4 < 0
        assert h_active(N, Fraction(1, 2)) == Fraction(-3, 8) * N + Fraction(1, 4)
        assert h_active(N, Fraction(1, 2)) < 0


def test_cubic_root_examples():
    a = cubic_alpha(7)
    b = cubic_beta(2, 7)
    assert 0.18 < a < 0.19 and a > 1 / 7
    assert 0.16 < b < 0.17 and b > 1 / 7
    assert cubic_alpha(5) > 1 / 5
    assert cubic_beta(1, 10) == pytest.approx((3 - math.sqrt(6)) / 3, abs=1e-9)


def test_roots_bracketed():
    tol = 1e-10
    for N in range(2, 51):
        a = cubic_alpha(N, tol)
        assert 0 < a < 0.5
        assert h_active(N, a - tol) > 0 > h_active(N, a + tol)
    for C in range(1, 6):
        for N in range(2, 30):
            b = cubic_beta(C, N, tol)
            assert 0 < b < 0.5
            assert h_passive(C * N, b - tol) > 0 > h_passive(C * N, b + tol)


def test_roots_exceed_one_over_n():
    for N in range(5, 51):
        assert cubic_alpha(N) > 1 / N
    for C in range(1, 100):
        for N in range(C + 5, 101):
            if C * N > 100:
                break
            assert cubic_beta(C, N) > 1 / N


def test_cubic_rejects():
    with pytest.raises(InvalidParameterError):
        cubic_alpha(1)
    with pytest.raises(InvalidParameterError):
        cubic_beta(0, 7)
    with pytest.raises(InvalidParameterError):
        cubic_alpha(7, tol=0.0)


def test_optimization_result_params():
    res = optimize_theorem3(NetworkConfig(N=7, C=2, z=1, w=0.5))
    assert res.params.s == 1.0
    assert res.params.lam == res.lambda_star
    assert res.moments.objective == res.objective_value
    assert res.cell_variation() > 0
    assert combine(0.5, res.moments.active_moment, res.moments.passive_moment) == pytest.approx(res.objective_value)
