"""Per-user transmission rules compared in the experiments.

``second_order_optimal``
    ``s = 1`` chain with ``lam`` from the theoretical line search.
``slotted_aloha``
    i.i.d. transmissions with probability ``1/N`` (``r = 1/N, s = 1 - 1/N``).
``optimal_aloha``
    i.i.d. transmissions with the probability that scored best in simulation.
    Only available after the fact, hence an oracle baseline.
``age_threshold_aloha``
    A user whose believed age exceeds ``2.2 N`` transmits with probability
    ``4.69 / N``.  Without acknowledgements each attempt is assumed to have
    succeeded, so the believed age resets after every attempt.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .core import (
    ChainParams,
    InvalidParameterError,
    NetworkConfig,
    combine,
    params_from_rs,
)
from .optimize import optimize_theorem3

SECOND_ORDER_OPTIMAL = "second_order_optimal"
SLOTTED_ALOHA = "slotted_aloha"
OPTIMAL_ALOHA = "optimal_aloha"
AGE_THRESHOLD_ALOHA = "age_threshold_aloha"
POLICY_KINDS = (SECOND_ORDER_OPTIMAL, SLOTTED_ALOHA, OPTIMAL_ALOHA, AGE_THRESHOLD_ALOHA)

ATA_RATE_FACTOR = 4.69
ATA_THRESHOLD_FACTOR = 2.2

TX = 1
IDLE = 0


@dataclass(frozen=True)
class PolicySpec:
    """A transmission policy.  Chain-based kinds carry ``chain``; ATA carries its rate and threshold.

    ``ata_initial_max`` bounds the uniform draw of each user's initial
    believed age, ``{1, ..., ata_initial_max}``; it defaults to
    ``ceil(threshold) + 1`` so that users start desynchronised.
    """

    kind: str
    chain: ChainParams | None = None
    ata_r: float | None = None
    ata_threshold: float | None = None
    ata_initial_max: int | None = None

    def __post_init__(self):
        if self.kind not in POLICY_KINDS:
            raise InvalidParameterError(f"unknown policy kind {self.kind!r}")
        if self.kind == AGE_THRESHOLD_ALOHA:
            if self.ata_r is None or not 0.0 < self.ata_r <= 1.0:
                raise InvalidParameterError(f"ATA transmit probability must lie in (0, 1], got {self.ata_r!r}")
            if self.ata_threshold is None or not self.ata_threshold > 0:
                raise InvalidParameterError("ATA threshold must be positive")
            if self.ata_initial_max is None:
                object.__setattr__(self, "ata_initial_max", math.ceil(self.ata_threshold) + 1)
            elif self.ata_initial_max < 1:
                raise InvalidParameterError("ata_initial_max must be >= 1")
        elif self.chain is not None:
            if self.kind == SECOND_ORDER_OPTIMAL and abs(self.chain.s - 1.0) > 1e-12:
                raise InvalidParameterError("second_order_optimal requires s = 1")
            if self.kind in (SLOTTED_ALOHA, OPTIMAL_ALOHA) and not self.chain.is_iid:
                raise InvalidParameterError(f"{self.kind} requires r + s = 1")

    @property
    def is_chain(self) -> bool:
        return self.kind != AGE_THRESHOLD_ALOHA

    @property
    def ready(self) -> bool:
        return self.kind == AGE_THRESHOLD_ALOHA or self.chain is not None

    def describe(self) -> str:
        if self.kind == AGE_THRESHOLD_ALOHA:
            return f"{self.kind}(r={self.ata_r:.6g}, threshold={self.ata_threshold:.6g})"
        if self.chain is None:
            return f"{self.kind}(unselected)"
        return f"{self.kind}(r={self.chain.r:.6g}, s={self.chain.s:.6g})"


@dataclass
class AtaUserState:
    """Believed age of one ATA user: slots since its last attempt, counting the attempt slot as 1."""

    believed_aoi: int = 1


def aloha_policy(lam: float, kind: str = SLOTTED_ALOHA) -> PolicySpec:
    return PolicySpec(kind, chain=params_from_rs(lam, 1.0 - lam))


def make_policy(kind: str, config: NetworkConfig, precision: float = 0.01) -> PolicySpec:
    """Build a policy for ``config``.

    ``optimal_aloha`` comes back unselected; use :func:`select_optimal_aloha`.
    """
    N = config.N
    if kind == SECOND_ORDER_OPTIMAL:
        res = optimize_theorem3(config, precision)
        return PolicySpec(kind, chain=res.params)
    if kind == SLOTTED_ALOHA:
        return aloha_policy(1.0 / N, SLOTTED_ALOHA)
    if kind == AGE_THRESHOLD_ALOHA:
        rate = ATA_RATE_FACTOR / N
        if rate > 1.0:
            raise InvalidParameterError(f"ATA rate {ATA_RATE_FACTOR}/N = {rate:.4g} exceeds 1 for N={N}")
        return PolicySpec(kind, ata_r=rate, ata_threshold=ATA_THRESHOLD_FACTOR * N)
    if kind == OPTIMAL_ALOHA:
        return PolicySpec(kind)
    raise InvalidParameterError(f"unknown policy kind {kind!r}")


def aloha_sweep_grid(precision: float) -> list[float]:
    """``{precision, 2 precision, ...} < 1``; 0 and 1 are excluded (silent or jammed network)."""
    if not 0.0 < precision <= 0.5:
        raise InvalidParameterError(f"precision must lie in (0, 0.5], got {precision!r}")
    n = int(math.floor(1.0 / precision + 1e-9))
    return [k * precision for k in range(1, n + 1) if k * precision < 1.0 - 1e-12]


def optimal_aloha_sweep(config: NetworkConfig, sim_params, precision: float = 0.01, runner=None):
    """Simulated ``(lam, active_moment, passive_moment)`` for every ALOHA rate on the grid.

    ``runner(policy)`` must return a :class:`~aoimarkov.sim.SimOutcome`; it
    defaults to :func:`aoimarkov.sim.simulate` with ``config`` and
    ``sim_params``.  Every rate sees the same random streams.
    """
    if runner is None:
        from .sim import simulate

        def runner(policy):
            return simulate(config, policy, sim_params)

    rows = []
    for lam in aloha_sweep_grid(precision):
        out = runner(aloha_policy(lam, OPTIMAL_ALOHA))
        rows.append((lam, out.empirical_active_moment, out.empirical_passive_moment))
    return rows


def pick_optimal_aloha(sweep, w: float) -> PolicySpec:
    """Best rate of a sweep for weight ``w``; ties go to the smaller rate."""
    best_lam, best_f = None, math.inf
    for lam, active, passive in sweep:
        f = combine(w, active, passive)
        if f < best_f:
            best_lam, best_f = lam, f
    return aloha_policy(best_lam, OPTIMAL_ALOHA)


def select_optimal_aloha(config: NetworkConfig, sim_params, precision: float = 0.01) -> PolicySpec:
    """Slotted ALOHA with the rate minimising the *simulated* objective."""
    return pick_optimal_aloha(optimal_aloha_sweep(config, sim_params, precision), config.w)


def decide_transmit(
    policy: PolicySpec, chain_state: int, ata_state: AtaUserState | None, draw: float
) -> tuple[bool, int, AtaUserState | None]:
    """One slot of one user: ``(transmit, next chain state, next ATA state)``.

    Chain kinds transmit iff in TX; the draw then drives the transition
    (TX -> Idle iff ``draw < s``, Idle -> TX iff ``draw < r``).  ATA transmits
    iff its believed age exceeds the threshold and ``draw < ata_r``.
    """
    if policy.is_chain:
        chain = policy.chain
        if chain is None:
            raise InvalidParameterError(f"{policy.kind} has no chain selected yet")
        transmit = chain_state == TX
        if transmit:
            nxt = IDLE if draw < chain.s else TX
        else:
            nxt = TX if draw < chain.r else IDLE
        return transmit, nxt, ata_state
    believed = ata_state.believed_aoi
    transmit = believed > policy.ata_threshold and draw < policy.ata_r
    return transmit, chain_state, AtaUserState(1 if transmit else believed + 1)
