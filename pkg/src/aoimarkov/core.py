"""Domain types shared across the package.

A user's transmission activity is a two-state (TX / Idle) Markov chain with
``r = P(Idle -> TX)`` and ``s = P(TX -> Idle)``.  Most of the analysis is
easier in the ``(lam, theta)`` coordinates

    lam   = r / (r + s)       stationary probability of being in TX
    theta = 1 - r - s         second eigenvalue of the transition matrix

with inverse ``r = lam (1 - theta)``, ``s = (1 - lam)(1 - theta)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Slack when validating probabilities built from floating point arithmetic.
PROB_SLACK = 1e-12


class AoIError(Exception):
    """Base class for errors raised by this package."""


class InvalidParameterError(AoIError, ValueError):
    """An argument lies outside its documented domain."""


class NumericDomainError(AoIError, ArithmeticError):
    """The requested quantity is not defined at these parameters."""


class DivergentSeriesError(NumericDomainError):
    """Raised when ``|theta| >= 1``, where the covariance series do not converge."""


class DegenerateProcessError(NumericDomainError):
    """Raised when a success process is almost surely constant (lam in {0, 1})."""


class InternalInconsistencyError(AoIError, RuntimeError):
    """Two independent evaluation routes disagree."""


def _check_prob(name: str, value: float) -> float:
    value = float(value)
    if not np.isfinite(value) or value < -PROB_SLACK or value > 1.0 + PROB_SLACK:
        raise InvalidParameterError(f"{name}={value!r} is not a probability")
    return min(max(value, 0.0), 1.0)


@dataclass(frozen=True)
class ChainParams:
    """Transition probabilities of the per-user TX/Idle chain.

    Build instances with :func:`params_from_rs` or
    :func:`params_from_lambda_theta`; ``lam`` and ``theta`` are stored, not
    recomputed, so a line search over ``lam`` hits its grid points exactly.
    """

    r: float
    s: float
    lam: float
    theta: float

    @property
    def is_iid(self) -> bool:
        return abs(self.theta) <= PROB_SLACK

    def stationary_tx_probability(self, steps: int = 1000, start_tx: float = 0.0) -> float:
        """Evolve the state distribution ``steps`` slots from ``P(TX) = start_tx``."""
        p = float(start_tx)
        for _ in range(steps):
            p = p * (1.0 - self.s) + (1.0 - p) * self.r
        return p


def params_from_rs(r: float, s: float) -> ChainParams:
    """Chain parameters from the raw transition probabilities."""
    r = _check_prob("r", r)
    s = _check_prob("s", s)
    if r + s <= 0.0:
        raise InvalidParameterError("r + s must be positive; lam is undefined at r = s = 0")
    return ChainParams(r=r, s=s, lam=r / (r + s), theta=1.0 - r - s)


def params_from_lambda_theta(lam: float, theta: float) -> ChainParams:
    """Chain parameters from ``(lam, theta)``.

    Raises :class:`InvalidParameterError` if the implied ``r`` or ``s`` falls
    outside ``[0, 1]``, i.e. unless ``theta <= 1`` and
    ``theta >= -min(lam, 1 - lam) / max(lam, 1 - lam)``.  ``theta = 1``
    (``r = s = 0``, nobody ever changes state) is accepted and keeps ``lam``;
    :func:`params_from_rs` cannot express it.
    """
    lam = _check_prob("lam", lam)
    theta = float(theta)
    if not np.isfinite(theta):
        raise InvalidParameterError(f"theta={theta!r} is not finite")
    r = lam * (1.0 - theta)
    s = (1.0 - lam) * (1.0 - theta)
    for name, value in (("r", r), ("s", s)):
        if value < -PROB_SLACK or value > 1.0 + PROB_SLACK:
            raise InvalidParameterError(
                f"(lam={lam}, theta={theta}) implies {name}={value:.6g} outside [0, 1]"
            )
    # theta = 1 is the frozen chain r = s = 0; it stays representable with the given lam
    return ChainParams(r=min(max(r, 0.0), 1.0), s=min(max(s, 0.0), 1.0), lam=lam, theta=theta)


def min_feasible_theta(lam: float) -> float:
    """Smallest ``theta`` reachable for a given ``lam`` (the ``s = 1`` or ``r = 1`` edge)."""
    lam = _check_prob("lam", lam)
    if lam in (0.0, 1.0):
        return 0.0
    return -min(lam, 1.0 - lam) / max(lam, 1.0 - lam)


@dataclass(frozen=True)
class NetworkConfig:
    """``C`` clusters of ``N`` active users; objective ``w E[AoI_a^z] + (1-w) E[AoI_p^z]``."""

    N: int
    C: int = 1
    z: int = 1
    w: float = 0.5

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 2:
            raise InvalidParameterError(f"N must be an integer >= 2, got {self.N!r}")
        if int(self.C) != self.C or self.C < 1:
            raise InvalidParameterError(f"C must be an integer >= 1, got {self.C!r}")
        if int(self.z) != self.z or self.z < 1:
            raise InvalidParameterError(f"z must be an integer >= 1, got {self.z!r}")
        if not (0.0 <= float(self.w) <= 1.0):
            raise InvalidParameterError(f"w must lie in [0, 1], got {self.w!r}")

    @property
    def n_users(self) -> int:
        return self.C * self.N


@dataclass(frozen=True)
class SecondOrderStats:
    """Long-run mean and temporal variance of a binary success process."""

    mean: float
    temporal_variance: float

    def __post_init__(self):
        if not (0.0 < self.mean <= 1.0 + PROB_SLACK):
            raise InvalidParameterError(f"mean must lie in (0, 1], got {self.mean!r}")
        if not self.temporal_variance >= -PROB_SLACK:
            raise InvalidParameterError(
                f"temporal variance must be >= 0, got {self.temporal_variance!r}"
            )


@dataclass(frozen=True)
class AoIMoments:
    order: int
    active_moment: float
    passive_moment: float
    objective: float
    active_stats: SecondOrderStats | None = None
    passive_stats: SecondOrderStats | None = None


def combine(w: float, active: float, passive: float) -> float:
    """``w * active + (1 - w) * passive`` with ``0 * inf`` read as 0."""
    total = 0.0
    if w > 0.0:
        total += w * active
    if w < 1.0:
        total += (1.0 - w) * passive
    return total
