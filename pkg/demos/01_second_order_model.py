# Second-order model of a success process
#
# A user whose transmissions follow a two-state TX/Idle chain delivers a packet
# whenever it is the only transmitter in its cluster.  The resulting 0/1
# sequence is summarised by its long-run mean m and its temporal variance v^2
# (the variance of the sqrt(T)-scaled partial sums).  Here we compute both for
# a few chains and compare against a direct simulation.

import numpy as np

from aoimarkov.core import NetworkConfig, params_from_lambda_theta, params_from_rs
from aoimarkov.policies import PolicySpec
from aoimarkov.second_order import (
    active_stats,
    active_variance_closed_form,
    conditional_success_probability,
    passive_stats,
)
from aoimarkov.sim import SimParams, simulate

N, C = 7, 2

# lambda is the stationary TX probability, theta = 1 - r - s the chain memory.
# theta = 0 is plain slotted ALOHA; theta < 0 makes users alternate.
chains = {
    "slotted ALOHA (theta = 0)": params_from_rs(1 / 7, 6 / 7),
    "silent after transmit (s = 1)": params_from_lambda_theta(1 / 7, -1 / 6),
    "bursty (theta = 0.6)": params_from_lambda_theta(1 / 7, 0.6),
}

print(f"{'chain':32s} {'m_a':>9s} {'v2_a':>9s} {'m_p':>9s} {'v2_p':>9s}")
for name, p in chains.items():
    a, s = active_stats(p, N), passive_stats(p, C, N)
    print(f"{name:32s} {a.mean:9.5f} {a.temporal_variance:9.5f} {s.mean:9.5f} {s.temporal_variance:9.5f}")

# All three chains share lambda, hence the same means; only v^2 moves.
# Alternation (theta < 0) makes deliveries more regular -> smaller v^2.

# The variance comes from two independent routes that must agree:
p = chains["silent after transmit (s = 1)"]
print("\nseries vs closed form:", active_stats(p, N).temporal_variance, active_variance_closed_form(p, N))

# ... and the lag-k success probabilities that build it can be obtained by
# simply iterating the one-step TX probability recursion:
lags = np.array([conditional_success_probability(p, N, k) for k in range(1, 9)])
print("P(success at t+k | success at t), k=1..8:", np.round(lags, 5))
print("stationary delivery rate              :", round(active_stats(p, N).mean, 5))

# Finally, the simulator's batch-means estimates (10 runs x 100k slots)
cfg = NetworkConfig(N=N, C=C)
out = simulate(cfg, PolicySpec("second_order_optimal", chain=p), SimParams(slots=100_000, runs=10))
print("\nsimulated m_a, v2_a:", round(out.empirical_m_a, 5), round(out.empirical_v2_a, 5))
print("simulated m_p, v2_p:", round(out.empirical_m_p, 5), round(out.empirical_v2_p, 5))
