"""Objective evaluation and minimisation over the transmission chain.

The optimum with ``N > C + 4`` has ``s = 1`` (go silent right after every
transmission) and ``lam <= 1/N``, so :func:`optimize_theorem3` only performs
a line search over ``lam`` on that edge.  :func:`grid_search_oracle` searches
the whole ``(r, s)`` square by brute force and exists to check that claim.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .core import (
    AoIMoments,
    ChainParams,
    DegenerateProcessError,
    InvalidParameterError,
    NetworkConfig,
    SecondOrderStats,
    combine,
    params_from_rs,
)
from .moments import aoi_moment
from .second_order import DEFAULT_CONTROL, SeriesControl, active_stats, passive_stats

DEFAULT_ROOT_TOL = 1e-10
BETA_SCAN_POINTS = 1000


@dataclass(frozen=True)
class OptimizationResult:
    lambda_star: float
    r_star: float
    s_star: float
    objective_value: float
    search_trace: list[tuple[float, float]] = field(default_factory=list)
    moments: AoIMoments | None = None

    @property
    def params(self) -> ChainParams:
        return silent_after_transmit(self.lambda_star)

    def cell_variation(self) -> float:
        """Largest change in F between the argmin and its neighbours on the search grid."""
        lams = [lam for lam, _ in self.search_trace]
        values = [f for _, f in self.search_trace]
        i = lams.index(self.lambda_star)
        diffs = [abs(values[j] - values[i]) for j in (i - 1, i + 1) if 0 <= j < len(values)]
        return max(diffs, default=0.0)


@dataclass(frozen=True)
class CubicRoots:
    alpha: float
    beta: float


def silent_after_transmit(lam: float) -> ChainParams:
    """The ``s = 1`` chain with stationary TX probability ``lam`` (``r = lam / (1 - lam)``)."""
    if not 0.0 <= lam <= 0.5:
        raise InvalidParameterError(f"lam must lie in [0, 1/2] on the s = 1 edge, got {lam!r}")
    return ChainParams(r=min(lam / (1.0 - lam), 1.0), s=1.0, lam=lam, theta=-lam / (1.0 - lam))


@lru_cache(maxsize=65536)
def _stats(
    lam: float, theta: float, r: float, s: float, N: int, C: int, ctrl: SeriesControl
) -> tuple[SecondOrderStats, SecondOrderStats]:
    params = ChainParams(r=r, s=s, lam=lam, theta=theta)
    return active_stats(params, N, ctrl), passive_stats(params, C, N, ctrl)


def second_order_pair(
    params: ChainParams, N: int, C: int, ctrl: SeriesControl = DEFAULT_CONTROL
) -> tuple[SecondOrderStats, SecondOrderStats]:
    """``(active, passive)`` second-order statistics, memoised."""
    return _stats(params.lam, params.theta, params.r, params.s, int(N), int(C), ctrl)


def objective(
    config: NetworkConfig, params: ChainParams, ctrl: SeriesControl = DEFAULT_CONTROL
) -> AoIMoments:
    """Theoretical AoI moments and ``F = w E[AoI_a^z] + (1 - w) E[AoI_p^z]``.

    A silent network (``lam = 0``) leaves the active age unbounded while the
    passive age stays at one; ``lam = 1`` starves everybody.  Both are
    reported with infinite moments instead of raising.
    """
    z, w = config.z, config.w
    try:
        act, pas = second_order_pair(params, config.N, config.C, ctrl)
    except DegenerateProcessError:
        passive = 1.0 if params.lam == 0.0 else math.inf
        return AoIMoments(z, math.inf, passive, combine(w, math.inf, passive))
    a = aoi_moment(act, z)
    p = aoi_moment(pas, z)
    return AoIMoments(z, a, p, combine(w, a, p), act, pas)


def line_search_grid(N: int, precision: float) -> np.ndarray:
    """``{precision, 2 precision, ...} <= 1/N`` plus ``1/N`` itself."""
    if not precision > 0.0:
        raise InvalidParameterError(f"precision must be positive, got {precision!r}")
    upper = 1.0 / N
    if precision > upper:
        raise InvalidParameterError(f"precision {precision} exceeds the search interval (0, 1/{N}]")
    n = int(math.floor(upper / precision + 1e-9))
    grid = [k * precision for k in range(1, n + 1)]
    if abs(grid[-1] - upper) > 1e-12:
        grid.append(upper)
    else:
        grid[-1] = upper
    return np.array(grid)


def optimize_theorem3(
    config: NetworkConfig, precision: float = 0.01, ctrl: SeriesControl = DEFAULT_CONTROL
) -> OptimizationResult:
    """Exhaustive line search over ``lam`` in ``(0, 1/N]`` with ``s = 1``.

    Ties go to the smaller ``lam``.
    """
    trace = []
    best = None
    for lam in line_search_grid(config.N, precision):
        lam = float(lam)
        mom = objective(config, silent_after_transmit(lam), ctrl)
        trace.append((lam, mom.objective))
        if best is None or mom.objective < best[1].objective:
            best = (lam, mom)
    lam, mom = best
    chain = silent_after_transmit(lam)
    return OptimizationResult(lam, chain.r, chain.s, mom.objective, trace, mom)


def _axis(step: float) -> np.ndarray:
    n = int(math.floor(1.0 / step + 1e-9))
    values = [k * step for k in range(1, n + 1)]
    if abs(values[-1] - 1.0) > 1e-12:
        values.append(1.0)
    else:
        values[-1] = 1.0
    return np.array(values)


def objective_grid(
    config: NetworkConfig, step: float, ctrl: SeriesControl = DEFAULT_CONTROL
) -> tuple[np.ndarray, np.ndarray]:
    """F over the ``(r, s)`` grid; ``values[i, j]`` belongs to ``(axis[i], axis[j])``.

    Points with ``|theta| >= 1`` (only ``r = s = 1``) are set to ``inf``.
    """
    if not 0.0 < step <= 0.5:
        raise InvalidParameterError(f"step must lie in (0, 0.5], got {step!r}")
    axis = _axis(step)
    values = np.full((axis.size, axis.size), np.inf)
    for i, r in enumerate(axis):
        for j, s in enumerate(axis):
            params = params_from_rs(r, s)
            if abs(params.theta) >= 1.0:
                continue
            values[i, j] = objective(config, params, ctrl).objective
    return axis, values


def grid_search_oracle(
    config: NetworkConfig, step: float = 0.02, ctrl: SeriesControl = DEFAULT_CONTROL
) -> tuple[ChainParams, float]:
    """Brute-force argmin of F over ``r, s in {step, 2 step, ..., 1}``.

    Scans row-major (``r`` outer), so ties resolve to the smallest ``r`` and
    then the smallest ``s``.
    """
    axis, values = objective_grid(config, step, ctrl)
    i, j = np.unravel_index(int(np.argmin(values)), values.shape)
    return params_from_rs(axis[i], axis[j]), float(values[i, j])


def h_active(N: int, y):
    """``h_N(y) = -(N + 8) y^3 - (N - 13) y^2 - 6 y + 1``; exact for Fraction input."""
    return -(N + 8) * y**3 - (N - 13) * y**2 - 6 * y + 1


def h_passive(CN: int, y):
    """``(CN - 10) y^3 - (CN - 13) y^2 - 6 y + 1``; exact for Fraction input."""
    return (CN - 10) * y**3 - (CN - 13) * y**2 - 6 * y + 1


def _bisect(f, lo: float, hi: float, tol: float) -> float:
    # invariant: f(lo) > 0 >= f(hi)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def cubic_alpha(N: int, tol: float = DEFAULT_ROOT_TOL) -> float:
    """Smallest positive root of ``h_N``.

    ``h_N`` is strictly decreasing on ``y >= 0`` with ``h_N(0) = 1`` and
    ``h_N(1) = -2N``, so plain bisection on ``[0, 1]`` finds the unique root.
    """
    if int(N) != N or N < 2:
        raise InvalidParameterError(f"N must be an integer >= 2, got {N!r}")
    if not tol > 0:
        raise InvalidParameterError("tol must be positive")
    return _bisect(lambda y: h_active(N, y), 0.0, 1.0, tol)


def cubic_beta(C: int, N: int, tol: float = DEFAULT_ROOT_TOL) -> float:
    """Smallest positive root of the passive cubic with ``CN = C * N``.

    The first sign change on a uniform scan of ``[0, 1]`` is refined by
    bisection.  ``h(0) = 1`` and ``h(1) = -2`` guarantee one exists.
    """
    if int(C) != C or C < 1:
        raise InvalidParameterError(f"C must be an integer >= 1, got {C!r}")
    if int(N) != N or N < 2:
        raise InvalidParameterError(f"N must be an integer >= 2, got {N!r}")
    if not tol > 0:
        raise InvalidParameterError("tol must be positive")
    CN = C * N
    ys = np.linspace(0.0, 1.0, BETA_SCAN_POINTS + 1)
    hs = h_passive(CN, ys)
    idx = int(np.argmax(hs <= 0.0))
    return _bisect(lambda y: h_passive(CN, y), float(ys[idx - 1]), float(ys[idx]), tol)


def cubic_roots(C: int, N: int, tol: float = DEFAULT_ROOT_TOL) -> CubicRoots:
    return CubicRoots(cubic_alpha(N, tol), cubic_beta(C, N, tol))
