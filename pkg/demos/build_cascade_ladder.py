"""
Building a cost ladder from a recorded trace
============================================

Searches cascade thresholds across a sweep of cost/quality trade-offs,
then reduces the sweep to a clean ladder of operating points.
"""

import numpy as np

from cascadekit import (
    SearchParams,
    interpolate,
    monotonic_filter,
    pareto_filter,
    search_collection,
    synth_trace,
)

# a synthetic trace: four experts, ascending cost and quality
trace = synth_trace(n_experts=4, n_samples=3000, seed=7, difficulty_skew=0.5)
print("experts:", list(trace.experts))
print("costs:  ", trace.costs.tolist())
print("mean perf per expert:", np.round(trace.mean_perfs, 3).tolist())
print()

# sweep the trade-off weight from all-cost to all-quality
params = SearchParams(lambda_grid=tuple(k * 0.1 for k in range(11)), delta=0.05)
collection = search_collection(trace, params)
print(f"searched {len(collection)} trade-off points")

# keep only points no other point beats on both cost and quality
frontier = pareto_filter(collection)
print(f"pareto frontier keeps {len(frontier)}")

# densify the frontier, then force strictly increasing cost and confidence
dense = interpolate(frontier, trace, step=0.02)
ladder = monotonic_filter(dense)
print(f"interpolated to {len(dense)}, monotone ladder keeps {len(ladder)}")
print()

print(f"{'lambda':>8} {'cost':>9} {'perf':>7}  thresholds")
for entry in ladder.entries:
    r = entry.report
    c = entry.config
    print(
        f"{c.lam:8.3f} {r.mean_cost_raw:9.4f} {r.perf:7.4f}"
        f"  exit>{tuple(round(v, 3) for v in c.t2)}"
        f" skip<{tuple(round(v, 3) for v in c.t1)}"
    )

# the cheapest rung routes everything to the first expert; the most
# expensive one runs the full cascade. everything between trades a
# little quality for a lot of cost.
cheap, dear = ladder.entries[0].report, ladder.entries[-1].report
print()
print(f"cost span {cheap.mean_cost_raw:.3f} .. {dear.mean_cost_raw:.3f}, "
      f"perf span {cheap.perf:.3f} .. {dear.perf:.3f}")
