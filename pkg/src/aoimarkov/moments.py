"""Moments of AoI from the second-order statistics of a success process.

Between two successes ``l`` slots apart the age runs through ``1, 2, ..., l``,
so the long-run ``z``-th moment of AoI is a ratio of renewal rewards::

    E[AoI^z] = E[sum_{k=1}^{l} k^z] / E[l]

Faulhaber's formula turns the numerator into a combination of ``E[l^j]``.
The gap ``l`` is modelled as the first passage of a Brownian motion with
drift ``m`` and variance ``v2`` through level one, i.e. inverse Gaussian with
mean ``1/m`` and shape ``1/v2``, whose raw moments are polynomial in
``v2 / (2 m)``.

Coefficients are exact :class:`fractions.Fraction` values; floats only
appear when the gap moments are assembled.
"""

from __future__ import annotations

import math
import threading
from fractions import Fraction

from .core import InternalInconsistencyError, InvalidParameterError, SecondOrderStats

# Exact integer factorial ratios up to this gap-moment order; log-space beyond.
EXACT_RATIO_MAX = 20

_bernoulli_cache: list[Fraction] = [Fraction(1)]
_bernoulli_lock = threading.Lock()


def bernoulli_numbers(max_k: int) -> list[Fraction]:
    """``B_0 .. B_max_k`` from ``sum_{j=0}^{k} C(k+1, j) B_j = 0`` (so ``B_1 = -1/2``).

    Only ``B_k`` with ``k >= 2`` enter the AoI formulas; the ``B_1`` term of
    Faulhaber's formula is written out explicitly as ``+ l^z / 2``.
    """
    if int(max_k) != max_k or max_k < 0:
        raise InvalidParameterError(f"max_k must be a non-negative integer, got {max_k!r}")
    if len(_bernoulli_cache) <= max_k:
        with _bernoulli_lock:
            cache = list(_bernoulli_cache)
            for k in range(len(cache), max_k + 1):
                acc = sum(math.comb(k + 1, j) * cache[j] for j in range(k))
                cache.append(-acc / (k + 1))
            _bernoulli_cache[:] = cache
    return list(_bernoulli_cache[: max_k + 1])


def faulhaber_coefficients(z: int) -> dict[int, Fraction]:
    """Map ``power -> coefficient`` with ``sum_{k=1}^{l} k^z = sum c_p l^p``."""
    if int(z) != z or z < 1:
        raise InvalidParameterError(f"z must be an integer >= 1, got {z!r}")
    bern = bernoulli_numbers(z)
    coef = {z + 1: Fraction(1, z + 1), z: Fraction(1, 2)}
    for k in range(2, z + 1):
        if bern[k] == 0:
            continue
        power = z - k + 1
        c = bern[k] / math.factorial(k) * Fraction(math.factorial(z), math.factorial(power))
        coef[power] = coef.get(power, Fraction(0)) + c
    return coef


def faulhaber_sum(l: int, z: int) -> int:
    """``sum_{k=1}^{l} k^z`` through the Bernoulli-number expansion, in exact arithmetic."""
    if int(l) != l or l < 1:
        raise InvalidParameterError(f"l must be an integer >= 1, got {l!r}")
    total = sum(c * Fraction(l) ** p for p, c in faulhaber_coefficients(z).items())
    if total.denominator != 1:
        raise InternalInconsistencyError(
            f"Faulhaber expansion for l={l}, z={z} is not an integer: {total}"
        )
    return int(total)


def _ig_weight_log(k: int, zeta: int) -> float:
    return math.lgamma(k + zeta) - math.lgamma(zeta + 1) - math.lgamma(k - zeta)


def ig_interdelivery_moment(m: float, v2: float, k: int) -> float:
    """k-th raw moment of an inverse Gaussian gap with mean ``1/m`` and shape ``1/v2``.

    ``E[l^k] = m^-k * sum_{zeta<k} (k-1+zeta)! / (zeta! (k-1-zeta)!) * (v2 / 2m)^zeta``.
    ``v2 = 0`` gives the deterministic gap ``1/m``.
    """
    m = float(m)
    v2 = float(v2)
    if not m > 0.0:
        raise InvalidParameterError(f"mean must be positive, got {m!r}")
    if v2 < 0.0:
        raise InvalidParameterError(f"temporal variance must be >= 0, got {v2!r}")
    if int(k) != k or k < 1:
        raise InvalidParameterError(f"k must be an integer >= 1, got {k!r}")
    if v2 == 0.0:
        return m**-k
    ratio = v2 / (2.0 * m)
    total = 0.0
    if k <= EXACT_RATIO_MAX:
        for zeta in range(k):
            weight = math.factorial(k - 1 + zeta) // (math.factorial(zeta) * math.factorial(k - 1 - zeta))
            total += weight * ratio**zeta
        return total / m**k
    log_ratio = math.log(ratio)
    log_m = math.log(m)
    for zeta in range(k):
        total += math.exp(_ig_weight_log(k, zeta) + zeta * log_ratio - k * log_m)
    return total


def aoi_moment(stats: SecondOrderStats, z: int) -> float:
    """Approximate ``E[AoI^z]`` for a success process with the given mean and temporal variance."""
    coef = faulhaber_coefficients(z)
    m, v2 = stats.mean, stats.temporal_variance
    v2 = max(v2, 0.0)
    numerator = 0.0
    for power, c in sorted(coef.items()):
        if power == 0:
            numerator += float(c)
        else:
            numerator += float(c) * ig_interdelivery_moment(m, v2, power)
    return numerator * m


def aoi_moment_closed(stats: SecondOrderStats, z: int) -> float:
    """Hand-expanded first and second AoI moments; a cross-check for :func:`aoi_moment`."""
    m, v2 = stats.mean, max(stats.temporal_variance, 0.0)
    if z == 1:
        return 0.5 * (v2 / m**2 + 1.0 / m) + 0.5
    if z == 2:
        return v2**2 / m**4 + v2 / m**3 + (3.0 * v2 + 2.0) / (6.0 * m**2) + 1.0 / (2.0 * m) + 1.0 / 6.0
    raise InvalidParameterError(f"closed forms exist for z in {{1, 2}} only, got {z!r}")
