# Policy comparison over the active/passive weight
#
# For each w we simulate four policies with identical random streams and
# report simulated F divided by the theoretical F of the s = 1 line-search
# solution (ratio < 1 is better).  Pass --full for 10 runs x 100k slots and a
# 0.01 sweep for the optimal ALOHA oracle; the default is a quick preview.

import sys

from aoimarkov.core import NetworkConfig
from aoimarkov.experiment import ExperimentManifest, SimulationCache, run_experiment
from aoimarkov.sim import SimParams

full = "--full" in sys.argv
sim = SimParams(slots=100_000, runs=10) if full else SimParams(slots=20_000, runs=3)
precision = 0.01 if full else 0.05

cache = SimulationCache(max_order=2)   # z = 1 and z = 2 share the simulated runs
for z in (1, 2):
    manifest = ExperimentManifest(config=NetworkConfig(N=7, C=2, z=z), sim=sim, precision=precision)
    rows = run_experiment(manifest, cache)
    table = {}
    for row in rows:
        table.setdefault(row.w, {})[row.policy] = row.ratio
    policies = manifest.policies
    print(f"\nz = {z}: simulated F / theoretical F of the line-search solution")
    print("   w  " + "".join(f"{p:>22s}" for p in policies))
    for w, ratios in table.items():
        print(f"{w:4.1f}  " + "".join(f"{ratios[p]:22.4f}" for p in policies))
