"""Mean and temporal variance of the delivery and passive detection processes.

For a user in a cluster of ``N`` and a network of ``C * N`` active users whose
chains all share ``(lam, theta)``::

    m_a  = lam (1 - lam)^(N-1)
    m_p  = (1 - lam)^(CN)
    v_a2 = 2 m_a sum_k [K_a(theta^k) - m_a] + m_a - m_a^2
    v_p2 = 2 m_p sum_k [K_p(theta^k) - m_p] + m_p - m_p^2

with ``K_a(x) = (lam + (1 - lam) x)(1 - lam + lam x)^(N-1)`` and
``K_p(x) = (1 - lam + lam x)^(CN)``; ``K(theta^k)`` is the probability of a
success ``k`` slots after a success.

Temporal variances are evaluated twice: by truncating the series and by
expanding ``K`` as a polynomial in ``x`` so that every power of ``theta^k``
sums geometrically.  The two must agree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .core import (
    ChainParams,
    DegenerateProcessError,
    DivergentSeriesError,
    InternalInconsistencyError,
    InvalidParameterError,
    SecondOrderStats,
)

# Exact binomial coefficients up to this order; log-space beyond.
EXACT_BINOMIAL_MAX = 64


@dataclass(frozen=True)
class SeriesControl:
    """Truncation policy for the covariance series."""

    tolerance: float = 1e-12
    max_terms: int = 100_000

    def __post_init__(self):
        if not self.tolerance > 0:
            raise InvalidParameterError("tolerance must be positive")
        if int(self.max_terms) != self.max_terms or self.max_terms < 1:
            raise InvalidParameterError("max_terms must be an integer >= 1")


DEFAULT_CONTROL = SeriesControl()


def _check_N(N: int) -> None:
    if int(N) != N or N < 2:
        raise InvalidParameterError(f"N must be an integer >= 2, got {N!r}")


def _check_C(C: int) -> None:
    if int(C) != C or C < 1:
        raise InvalidParameterError(f"C must be an integer >= 1, got {C!r}")


def _check_lam(lam: float) -> float:
    lam = float(lam)
    if not (0.0 <= lam <= 1.0):
        raise InvalidParameterError(f"lam={lam!r} is not a probability")
    return lam


def active_mean(lam: float, N: int) -> float:
    """Per-slot success rate of an active user, ``lam (1 - lam)^(N-1)``."""
    _check_N(N)
    lam = _check_lam(lam)
    return lam * (1.0 - lam) ** (N - 1)


def passive_mean(lam: float, C: int, N: int) -> float:
    """Fraction of slots with no active transmission anywhere, ``(1 - lam)^(CN)``."""
    _check_N(N)
    _check_C(C)
    lam = _check_lam(lam)
    return (1.0 - lam) ** (C * N)


def binomial_weights(n: int, lam: float) -> np.ndarray:
    """``C(n, j) (1 - lam)^(n - j) lam^j`` for ``j = 0..n`` with ``0 < lam < 1``."""
    j = np.arange(n + 1)
    if n <= EXACT_BINOMIAL_MAX:
        coef = np.array([float(math.comb(n, int(i))) for i in j])
        return coef * (1.0 - lam) ** (n - j) * lam**j
    log_coef = np.array([math.lgamma(n + 1) - math.lgamma(i + 1) - math.lgamma(n - i + 1) for i in j])
    return np.exp(log_coef + (n - j) * math.log1p(-lam) + j * math.log(lam))


def _kernel_coefficients(lam: float, n_cluster: int, n_total: int, kind: str) -> np.ndarray:
    """Polynomial coefficients of the success-after-success kernel in ``x = theta^k``."""
    if kind == "active":
        b = binomial_weights(n_cluster - 1, lam)
        a = np.zeros(n_cluster + 1)
        a[:-1] += lam * b
        a[1:] += (1.0 - lam) * b
        return a
    return binomial_weights(n_total, lam)


def _validate_chain(params: ChainParams) -> None:
    if abs(params.theta) >= 1.0:
        raise DivergentSeriesError(
            f"theta={params.theta:.6g}: the covariance series diverges for |theta| >= 1"
        )
    if params.lam <= 0.0 or params.lam >= 1.0:
        raise DegenerateProcessError(
            f"lam={params.lam!r}: success process is constant, temporal variance undefined"
        )


def _n_terms(theta: float, mean: float, ctrl: SeriesControl) -> tuple[int, bool]:
    """Number of series terms needed so that the neglected tail is below tolerance.

    Each term satisfies ``|K(theta^k) - m| <= |theta|^k`` (the absolute
    coefficients of ``K`` sum to one), so after ``K`` terms the tail is at
    most ``2 m |theta|^(K+1) / (1 - |theta|)``.
    """
    a = abs(theta)
    if a == 0.0:
        return 0, True
    target = ctrl.tolerance * (1.0 - a) / (2.0 * mean)
    if target >= 1.0:
        return 0, True
    needed = max(int(math.ceil(math.log(target) / math.log(a))) - 1, 0)
    if needed > ctrl.max_terms:
        return ctrl.max_terms, False
    return needed, True


def _tail_bound(theta: float, mean: float, n_terms: int) -> float:
    a = abs(theta)
    return 2.0 * mean * a ** (n_terms + 1) / (1.0 - a)


def _kernel(lam: float, x: np.ndarray, n_cluster: int, n_total: int, kind: str) -> np.ndarray:
    if kind == "active":
        return (lam + (1.0 - lam) * x) * (1.0 - lam + lam * x) ** (n_cluster - 1)
    return (1.0 - lam + lam * x) ** n_total


def _variance_series(
    mean: float, params: ChainParams, n_cluster: int, n_total: int, kind: str, n_terms: int
) -> float:
    total = 0.0
    chunk = 4096
    for start in range(1, n_terms + 1, chunk):
        k = np.arange(start, min(start + chunk, n_terms + 1))
        kern = _kernel(params.lam, params.theta**k, n_cluster, n_total, kind)
        total += float(np.sum(kern - mean))
    return 2.0 * total * mean + mean - mean * mean


def _variance_closed(mean: float, theta: float, coef: np.ndarray) -> float:
    if theta == 0.0:
        return mean - mean * mean
    p = np.arange(1, coef.size)
    tp = theta**p
    geometric = tp / (1.0 - tp)
    return 2.0 * mean * float(np.dot(coef[1:], geometric)) + mean - mean * mean


def _temporal_variance(
    params: ChainParams, N: int, C: int, kind: str, ctrl: SeriesControl
) -> float:
    if kind == "active":
        mean = active_mean(params.lam, N)
    else:
        mean = passive_mean(params.lam, C, N)
    n_terms, converged = _n_terms(params.theta, mean, ctrl)
    series = _variance_series(mean, params, N, C * N, kind, n_terms)
    closed = _variance_closed(mean, params.theta, _kernel_coefficients(params.lam, N, C * N, kind))
    allowed = 10.0 * ctrl.tolerance
    if not converged:
        allowed += _tail_bound(params.theta, mean, n_terms)
    if abs(series - closed) > allowed:
        raise InternalInconsistencyError(
            f"{kind} temporal variance: series {series!r} vs closed form {closed!r}"
        )
    return series


def active_temporal_variance(
    params: ChainParams, N: int, ctrl: SeriesControl = DEFAULT_CONTROL
) -> float:
    """Temporal variance ``v_a^2`` of an active user's delivery process."""
    _check_N(N)
    _validate_chain(params)
    return _temporal_variance(params, N, 1, "active", ctrl)


def passive_temporal_variance(
    params: ChainParams, C: int, N: int, ctrl: SeriesControl = DEFAULT_CONTROL
) -> float:
    """Temporal variance ``v_p^2`` of the passive detection process."""
    _check_N(N)
    _check_C(C)
    _validate_chain(params)
    return _temporal_variance(params, N, C, "passive", ctrl)


def active_variance_closed_form(params: ChainParams, N: int) -> float:
    """Exact ``v_a^2`` from the polynomial expansion alone (no series)."""
    _check_N(N)
    _validate_chain(params)
    m = active_mean(params.lam, N)
    return _variance_closed(m, params.theta, _kernel_coefficients(params.lam, N, N, "active"))


def passive_variance_closed_form(params: ChainParams, C: int, N: int) -> float:
    """Exact ``v_p^2`` from the polynomial expansion alone (no series)."""
    _check_N(N)
    _check_C(C)
    _validate_chain(params)
    m = passive_mean(params.lam, C, N)
    return _variance_closed(m, params.theta, _kernel_coefficients(params.lam, N, C * N, "passive"))


def active_stats(params: ChainParams, N: int, ctrl: SeriesControl = DEFAULT_CONTROL) -> SecondOrderStats:
    v2 = active_temporal_variance(params, N, ctrl)
    return SecondOrderStats(active_mean(params.lam, N), max(v2, 0.0))


def passive_stats(
    params: ChainParams, C: int, N: int, ctrl: SeriesControl = DEFAULT_CONTROL
) -> SecondOrderStats:
    v2 = passive_temporal_variance(params, C, N, ctrl)
    return SecondOrderStats(passive_mean(params.lam, C, N), max(v2, 0.0))


def conditional_success_probability(
    params: ChainParams,
    N: int,
    k: int,
    kind: Literal["active", "passive"] = "active",
    C: int = 1,
) -> float:
    """Probability of a success ``k`` slots after a success, from the TX-state recursions.

    Iterates ``G(i) = r + theta * G(i - 1)`` for the probability that a user is
    in TX ``i - 1`` slots after the conditioning slot.  The reference user
    starts from ``G(1) = 1`` (it was the lone transmitter) and every other
    user from ``G(1) = 0`` (it was silent).  Deliberately avoids the closed
    form so it can serve as an independent check of the variance kernels.
    """
    if int(k) != k or k < 1:
        raise InvalidParameterError(f"k must be an integer >= 1, got {k!r}")
    _check_N(N)
    _check_C(C)
    if abs(params.theta) >= 1.0:
        raise DivergentSeriesError(f"theta={params.theta:.6g} has |theta| >= 1")
    g_self, g_other = 1.0, 0.0
    for _ in range(k):
        g_self = params.r + params.theta * g_self
        g_other = params.r + params.theta * g_other
    if kind == "active":
        return g_self * (1.0 - g_other) ** (N - 1)
    if kind == "passive":
        return (1.0 - g_other) ** (C * N)
    raise InvalidParameterError(f"kind must be 'active' or 'passive', got {kind!r}")
