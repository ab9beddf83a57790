"""Slot-level Monte Carlo simulation of the clustered random access network.

Every run draws one uniform number per user per slot (plus one at start-up)
from its own Philox stream keyed by ``(base_seed, run_index, user_index)``,
so runs and users never share random numbers and every policy simulated
with the same :class:`SimParams` sees identical draws.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import IO, Iterable

import numba
import numpy as np

from .core import InvalidParameterError, NetworkConfig, SecondOrderStats, combine
from .policies import PolicySpec

GENERATOR = "numpy Philox4x32-10, SeedSequence(base_seed, spawn_key=(run, user))"

_MODE_CHAIN = 0
_MODE_ATA = 1


@dataclass(frozen=True)
class SimParams:
    slots: int = 100_000
    runs: int = 10
    base_seed: int = 0
    warmup_slots: int = 1_000
    batch_length: int = 1_000

    def __post_init__(self):
        for name in ("slots", "runs", "batch_length"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise InvalidParameterError(f"{name} must be a positive integer, got {value!r}")
        if int(self.warmup_slots) != self.warmup_slots or self.warmup_slots < 0:
            raise InvalidParameterError("warmup_slots must be a non-negative integer")
        if self.slots <= self.warmup_slots:
            raise InvalidParameterError("slots must exceed warmup_slots")
        if int(self.base_seed) != self.base_seed or self.base_seed < 0:
            raise InvalidParameterError("base_seed must be a non-negative integer")

    @property
    def measured_slots(self) -> int:
        return self.slots - self.warmup_slots


@dataclass
class RunResult:
    """Raw output of one run.

    ``active_power_means[k-1]`` is the time average of ``AoI^k`` over the
    measured slots, averaged over active users; likewise for the passive user.
    """

    run_index: int
    active_power_means: np.ndarray
    passive_power_means: np.ndarray
    m_a: float
    v2_a: float
    m_p: float
    v2_p: float
    transmit: np.ndarray | None = None
    active_success: np.ndarray | None = None
    passive_success: np.ndarray | None = None


@dataclass(frozen=True)
class RunRecord:
    run_index: int
    active_moment: float
    passive_moment: float
    objective: float
    m_a: float
    v2_a: float
    m_p: float
    v2_p: float


@dataclass(frozen=True)
class SimOutcome:
    empirical_active_moment: float
    empirical_passive_moment: float
    empirical_objective: float
    empirical_m_a: float
    empirical_v2_a: float
    empirical_m_p: float
    empirical_v2_p: float
    per_run: list[RunRecord] = field(default_factory=list)
    generator: str = GENERATOR

    def objective_standard_error(self) -> float:
        values = np.array([r.objective for r in self.per_run])
        if values.size < 2:
            return math.nan
        return float(values.std(ddof=1) / math.sqrt(values.size))


def _batch_means(x: np.ndarray, batch_length: int) -> tuple[float, float]:
    mean = float(x.mean())
    n_batches = x.size // batch_length
    sums = x[: n_batches * batch_length].reshape(n_batches, batch_length).sum(axis=1)
    v2 = float(np.sum((sums - batch_length * mean) ** 2) / (batch_length * (n_batches - 1)))
    return mean, v2


def estimate_second_order(indicators, batch_length: int) -> SecondOrderStats:
    """Sample mean and batch-means estimate of the temporal variance.

    The sequence is cut into ``B`` full batches of ``L = batch_length``
    slots (a trailing remainder is dropped) and
    ``v2 = sum_b (S_b - L mean)^2 / (L (B - 1))`` with ``S_b`` the batch sums.
    A sequence without any success has no valid statistics and is rejected.
    """
    x = np.asarray(indicators, dtype=np.float64)
    if x.ndim != 1:
        raise InvalidParameterError("indicators must be one-dimensional")
    if int(batch_length) != batch_length or batch_length < 1:
        raise InvalidParameterError("batch_length must be a positive integer")
    if x.size < 2 * batch_length:
        raise InvalidParameterError(
            f"need at least {2 * batch_length} samples for batch length {batch_length}, got {x.size}"
        )
    return SecondOrderStats(*_batch_means(x, batch_length))


def batch_means_standard_error(v2: float, n_batches: int) -> float:
    """Approximate standard error of a batch-means estimate (chi-square with ``B - 1`` dof)."""
    return v2 * math.sqrt(2.0 / (n_batches - 1))


@numba.njit(cache=True, nogil=True)
def _run_kernel(
    mode, state, draws, r, s, ata_r, ata_threshold, N, C, warmup, max_order,
    transmit, active_success, passive_success, active_pow, passive_pow,
):  # pragma: no cover - compiled
    n_users = N * C
    n_slots = transmit.shape[0]
    aoi = np.ones(n_users, dtype=np.int64)
    passive_aoi = 1
    for t in range(n_slots):
        any_tx = False
        for c in range(C):
            count = 0
            sender = -1
            for i in range(c * N, (c + 1) * N):
                u = draws[i, t + 1]
                if mode == 0:
                    tx = state[i] == 1
                    if tx:
                        state[i] = 0 if u < s else 1
                    else:
                        state[i] = 1 if u < r else 0
                else:
                    tx = state[i] > ata_threshold and u < ata_r
                    state[i] = 1 if tx else state[i] + 1
                if tx:
                    transmit[t, i] = 1
                    count += 1
                    sender = i
            if count > 0:
                any_tx = True
            for i in range(c * N, (c + 1) * N):
                if count == 1 and i == sender:
                    active_success[t, i] = 1
                    aoi[i] = 1
                else:
                    aoi[i] += 1
        if any_tx:
            passive_aoi += 1
        else:
            passive_success[t] = 1
            passive_aoi = 1
        if t >= warmup:
            for i in range(n_users):
                a = float(aoi[i])
                v = a
                for k in range(max_order):
                    active_pow[i, k] += v
                    v *= a
            a = float(passive_aoi)
            v = a
            for k in range(max_order):
                passive_pow[k] += v
                v *= a


def user_draws(sim: SimParams, run_index: int, n_users: int) -> np.ndarray:
    """Uniform draws ``(n_users, slots + 1)``; column 0 seeds the initial state."""
    out = np.empty((n_users, sim.slots + 1))
    for user in range(n_users):
        seq = np.random.SeedSequence(sim.base_seed, spawn_key=(run_index, user))
        out[user] = np.random.Generator(np.random.Philox(seq)).random(sim.slots + 1)
    return out


def initial_state(policy: PolicySpec, first_draws: np.ndarray) -> np.ndarray:
    """Stationary chain start ``TX ~ Bernoulli(lam)``, or ATA believed age uniform on ``1..ata_initial_max``."""
    if policy.is_chain:
        return (first_draws < policy.chain.lam).astype(np.int64)
    return 1 + np.floor(first_draws * policy.ata_initial_max).astype(np.int64)


def run_once(
    policy: PolicySpec,
    N: int,
    C: int,
    sim: SimParams,
    run_index: int,
    max_order: int = 1,
    keep_trace: bool = False,
) -> RunResult:
    """Simulate one run and reduce it to AoI power means and second-order estimates."""
    if not policy.ready:
        raise InvalidParameterError(f"{policy.kind} needs a rate; see select_optimal_aloha")
    n_users = N * C
    draws = user_draws(sim, run_index, n_users)
    state = initial_state(policy, draws[:, 0])
    transmit = np.zeros((sim.slots, n_users), dtype=np.int8)
    active_success = np.zeros((sim.slots, n_users), dtype=np.int8)
    passive_success = np.zeros(sim.slots, dtype=np.int8)
    active_pow = np.zeros((n_users, max_order))
    passive_pow = np.zeros(max_order)
    if policy.is_chain:
        args = (_MODE_CHAIN, policy.chain.r, policy.chain.s, 0.0, 0.0)
    else:
        args = (_MODE_ATA, 0.0, 0.0, policy.ata_r, policy.ata_threshold)
    _run_kernel(
        args[0], state, draws, args[1], args[2], args[3], args[4], N, C, sim.warmup_slots,
        max_order, transmit, active_success, passive_success, active_pow, passive_pow,
    )
    measured = sim.measured_slots
    m_a, v2_a, m_p, v2_p = _second_order_estimates(
        active_success[sim.warmup_slots:], passive_success[sim.warmup_slots:], sim.batch_length
    )
    result = RunResult(
        run_index=run_index,
        active_power_means=active_pow.mean(axis=0) / measured,
        passive_power_means=passive_pow / measured,
        m_a=m_a, v2_a=v2_a, m_p=m_p, v2_p=v2_p,
    )
    if keep_trace:
        result.transmit = transmit
        result.active_success = active_success
        result.passive_success = passive_success
    return result


def _second_order_estimates(active, passive, batch_length):
    if active.shape[0] < 2 * batch_length:
        # too short for batch means; the mean is still reported
        return float(active.mean()), math.nan, float(passive.mean()), math.nan
    per_user = [_batch_means(active[:, i].astype(np.float64), batch_length) for i in range(active.shape[1])]
    m_p, v2_p = _batch_means(passive.astype(np.float64), batch_length)
    m_a, v2_a = np.mean(per_user, axis=0)
    return float(m_a), float(v2_a), m_p, v2_p


def summarize(runs: Iterable[RunResult], z: int, w: float) -> SimOutcome:
    """Average per-run results into a :class:`SimOutcome` for moment order ``z`` and weight ``w``."""
    records = []
    for run in runs:
        if run.active_power_means.size < z:
            raise InvalidParameterError(f"run {run.run_index} only tracked orders up to {run.active_power_means.size}")
        a = float(run.active_power_means[z - 1])
        p = float(run.passive_power_means[z - 1])
        records.append(RunRecord(run.run_index, a, p, combine(w, a, p), run.m_a, run.v2_a, run.m_p, run.v2_p))
    if not records:
        raise InvalidParameterError("no runs to summarize")

    def avg(name):
        return float(np.mean([getattr(rec, name) for rec in records]))

    active = avg("active_moment")
    passive = avg("passive_moment")
    return SimOutcome(
        empirical_active_moment=active,
        empirical_passive_moment=passive,
        empirical_objective=combine(w, active, passive),
        empirical_m_a=avg("m_a"),
        empirical_v2_a=avg("v2_a"),
        empirical_m_p=avg("m_p"),
        empirical_v2_p=avg("v2_p"),
        per_run=records,
    )


def simulate_runs(
    policy: PolicySpec, N: int, C: int, sim: SimParams, max_order: int = 1
) -> list[RunResult]:
    return [run_once(policy, N, C, sim, i, max_order) for i in range(sim.runs)]


def simulate(config: NetworkConfig, policy: PolicySpec, sim: SimParams) -> SimOutcome:
    """Run ``sim.runs`` independent runs and average them."""
    return summarize(simulate_runs(policy, config.N, config.C, sim, config.z), config.z, config.w)


def write_trace(fh: IO[str], run: RunResult, N: int, C: int) -> None:
    """Dump a kept trace: ``slot, tx_0..tx_{CN-1}, cluster_0..cluster_{C-1}, passive``."""
    if run.transmit is None:
        raise InvalidParameterError("run was simulated without keep_trace=True")
    cols = (
        ["slot"]
        + [f"tx_{i}" for i in range(N * C)]
        + [f"cluster_{c}" for c in range(C)]
        + ["passive"]
    )
    fh.write("# " + ",".join(cols) + "\n")
    cluster_ok = run.active_success.reshape(-1, C, N).max(axis=2)
    for t in range(run.transmit.shape[0]):
        bits = ",".join(map(str, run.transmit[t]))
        flags = ",".join(map(str, cluster_ok[t]))
        fh.write(f"{t},{bits},{flags},{run.passive_success[t]}\n")


def read_trace(lines: Iterable[str], N: int, C: int):
    """Parse a trace dump back into ``(transmit, cluster_success, passive_success)`` arrays."""
    rows = [list(map(int, ln.split(","))) for ln in lines if ln.strip() and not ln.startswith("#")]
    data = np.array(rows, dtype=np.int64)
    n_users = N * C
    return data[:, 1:1 + n_users], data[:, 1 + n_users:1 + n_users + C], data[:, -1]


def replay_aoi(transmit: np.ndarray, N: int, C: int):
    """Recompute success flags and AoI paths from transmit bits alone.

    Returns ``(active_success, passive_success, active_aoi, passive_aoi)``
    where the AoI arrays hold the age at the end of each slot, starting
    from age 1 before the first slot.
    """
    n_slots = transmit.shape[0]
    per_cluster = transmit.reshape(n_slots, C, N).sum(axis=2)
    lone = np.repeat(per_cluster == 1, N, axis=1)
    active_success = (lone & (transmit == 1)).astype(np.int8)
    passive_success = (transmit.sum(axis=1) == 0).astype(np.int8)
    active_aoi = np.empty(transmit.shape, dtype=np.int64)
    passive_aoi = np.empty(n_slots, dtype=np.int64)
    a = np.ones(N * C, dtype=np.int64)
    p = 1
    for t in range(n_slots):
        a = np.where(active_success[t] == 1, 1, a + 1)
        p = 1 if passive_success[t] else p + 1
        active_aoi[t] = a
        passive_aoi[t] = p
    return active_success, passive_success, active_aoi, passive_aoi
