"""Policy comparison over a sweep of the weight ``w``.

For each ``w`` the theoretical objective of the line-search optimum is the
reference; every policy is simulated and reported as the ratio of its
simulated objective to that reference.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace

from . import __version__
from .core import InvalidParameterError, NetworkConfig
from .optimize import optimize_theorem3
from .policies import (
    OPTIMAL_ALOHA,
    POLICY_KINDS,
    SECOND_ORDER_OPTIMAL,
    PolicySpec,
    make_policy,
    optimal_aloha_sweep,
    pick_optimal_aloha,
)
from .sim import RunResult, SimOutcome, SimParams, simulate_runs, summarize

ROW_FIELDS = ("w", "policy", "actual_F", "theoretical_F_our_solution", "ratio")


@dataclass(frozen=True)
class ExperimentManifest:
    config: NetworkConfig
    policies: tuple[str, ...] = POLICY_KINDS
    w_grid: tuple[float, ...] = tuple(i / 10 for i in range(11))
    sim: SimParams = SimParams()
    precision: float = 0.01
    output_path: str | None = None

    def __post_init__(self):
        if not self.w_grid:
            raise InvalidParameterError("w_grid must not be empty")
        if any(not 0.0 <= w <= 1.0 for w in self.w_grid):
            raise InvalidParameterError("w_grid values must lie in [0, 1]")
        if any(b <= a for a, b in zip(self.w_grid, self.w_grid[1:])):
            raise InvalidParameterError("w_grid must be strictly increasing")
        if not self.policies:
            raise InvalidParameterError("at least one policy is required")
        for kind in self.policies:
            if kind not in POLICY_KINDS:
                raise InvalidParameterError(f"unknown policy kind {kind!r}")
        if not self.precision > 0:
            raise InvalidParameterError("precision must be positive")

    def canonical_text(self) -> str:
        """Everything that determines the data rows, as ``key = value`` lines."""
        c, s = self.config, self.sim
        items = [
            ("N", c.N), ("C", c.C), ("z", c.z),
            ("policies", ",".join(self.policies)),
            ("w_grid", ",".join(repr(float(w)) for w in self.w_grid)),
            ("precision", repr(float(self.precision))),
            ("slots", s.slots), ("runs", s.runs), ("warmup", s.warmup_slots),
            ("batch_length", s.batch_length), ("base_seed", s.base_seed),
        ]
        return "".join(f"{k} = {v}\n" for k, v in items)

    def digest(self) -> str:
        return hashlib.sha256(self.canonical_text().encode()).hexdigest()[:16]

    def provenance(self) -> str:
        return f"tool_version={__version__} seed={self.sim.base_seed} manifest={self.digest()}"


@dataclass(frozen=True)
class ExperimentRow:
    w: float
    policy: str
    actual_F: float
    theoretical_F_our_solution: float
    ratio: float
    detail: str = ""


@dataclass
class SimulationCache:
    """Memoises simulated runs by ``(policy, N, C, sim)``.

    Policies that coincide for several weights (common for the line-search
    optimum and for every ALOHA rate in the oracle sweep) are simulated once.
    """

    max_order: int = 1
    _store: dict = field(default_factory=dict)

    def runs(self, policy: PolicySpec, N: int, C: int, sim: SimParams) -> list[RunResult]:
        key = (self._policy_key(policy), N, C, sim)
        hit = self._store.get(key)
        if hit is None or hit[0].active_power_means.size < self.max_order:
            hit = simulate_runs(policy, N, C, sim, self.max_order)
            self._store[key] = hit
        return hit

    def outcome(self, config: NetworkConfig, policy: PolicySpec, sim: SimParams) -> SimOutcome:
        return summarize(self.runs(policy, config.N, config.C, sim), config.z, config.w)

    @staticmethod
    def _policy_key(policy: PolicySpec):
        # the kind label does not change the dynamics
        if policy.is_chain:
            return ("chain", policy.chain.r, policy.chain.s)
        return ("ata", policy.ata_r, policy.ata_threshold, policy.ata_initial_max)


def run_experiment(manifest: ExperimentManifest, cache: SimulationCache | None = None, skip=(), on_row=None):
    """Simulate every ``(w, policy)`` pair of the manifest in manifest order.

    ``skip`` holds ``(w, policy)`` pairs that are already done (resumed
    runs); ``on_row`` is called with each new :class:`ExperimentRow` as
    soon as it is available.
    """
    base = manifest.config
    if cache is None:
        cache = SimulationCache(max_order=base.z)
    cache.max_order = max(cache.max_order, base.z)
    sweep = None
    rows = []
    done = {(float(w), p) for w, p in skip}
    for w in manifest.w_grid:
        cfg = replace(base, w=float(w))
        theory = optimize_theorem3(cfg, manifest.precision)
        for kind in manifest.policies:
            if (float(w), kind) in done:
                continue
            if kind == SECOND_ORDER_OPTIMAL:
                policy = PolicySpec(kind, chain=theory.params)
            elif kind == OPTIMAL_ALOHA:
                if sweep is None:
                    sweep = optimal_aloha_sweep(
                        base, manifest.sim, manifest.precision,
                        runner=lambda pol: cache.outcome(base, pol, manifest.sim),
                    )
                policy = pick_optimal_aloha(sweep, cfg.w)
            else:
                policy = make_policy(kind, cfg, manifest.precision)
            actual = cache.outcome(cfg, policy, manifest.sim).empirical_objective
            row = ExperimentRow(
                w=float(w), policy=kind, actual_F=actual,
                theoretical_F_our_solution=theory.objective_value,
                ratio=actual / theory.objective_value, detail=policy.describe(),
            )
            rows.append(row)
            if on_row is not None:
                on_row(row)
    return rows
