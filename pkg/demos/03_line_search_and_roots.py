# Choosing the chain: line search on the s = 1 edge versus a full grid
#
# With more users per cluster than C + 4, the best chain goes silent right
# after each transmission (s = 1) and transmits with probability lam <= 1/N.
# We check this against a brute-force search over (r, s) and look at the two
# cubic roots that bound where the structural argument applies.

import numpy as np

from aoimarkov.core import NetworkConfig
from aoimarkov.optimize import cubic_roots, grid_search_oracle, objective_grid, optimize_theorem3

cfg = NetworkConfig(N=7, C=2, z=1, w=0.5)
res = optimize_theorem3(cfg, precision=0.01)
print(f"line search: lambda* = {res.lambda_star:.4f}, r* = {res.r_star:.4f}, s* = {res.s_star}, F = {res.objective_value:.4f}")
for lam, f in res.search_trace:
    print(f"   lambda = {lam:.4f}   F = {f:.4f}")

params, f_grid = grid_search_oracle(cfg, step=0.02)
print(f"\ngrid oracle (step 0.02): r = {params.r:.2f}, s = {params.s:.2f}, F = {f_grid:.4f}")

# Where does F live on the grid?  Show the best s for a few r values.
axis, values = objective_grid(cfg, 0.1)
for i, r in enumerate(axis):
    j = int(np.argmin(values[i]))
    print(f"   r = {r:.1f}: best s = {axis[j]:.1f}, F = {values[i, j]:.3f}")

# The roots alpha, beta of the two cubics both exceed 1/N when N > C + 4
for N, C in [(7, 2), (10, 1), (12, 3)]:
    roots = cubic_roots(C, N)
    print(f"N={N:2d} C={C}: alpha = {roots.alpha:.5f}, beta = {roots.beta:.5f}, 1/N = {1 / N:.5f}")

# Weighting active vs passive users moves the optimum
for z in (1, 2):
    lams = [optimize_theorem3(NetworkConfig(N=7, C=2, z=z, w=w)).lambda_star for w in np.linspace(0, 1, 11)]
    print(f"z={z}: lambda* over w = 0..1 ->", np.round(lams, 3))
