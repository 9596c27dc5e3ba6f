"""
Holding a cost budget on a live stream
======================================

Routes a stream of samples through a cascade while a feedback controller
moves along a precomputed ladder to keep the average cost near a target.
"""

import numpy as np

from cascadekit import (
    BudgetController,
    SearchParams,
    monotonic_filter,
    pareto_filter,
    route_stream,
    search_collection,
    synth_trace,
)

trace = synth_trace(n_experts=4, n_samples=3000, seed=7, difficulty_skew=0.5)
params = SearchParams(lambda_grid=tuple(k * 0.1 for k in range(11)), delta=0.05)
ladder = monotonic_filter(pareto_filter(search_collection(trace, params)))

rung_costs = [e.report.mean_cost_raw for e in ladder.entries]
print("ladder rung costs:", [round(c, 3) for c in rung_costs])

# aim between two rungs so the controller has to settle, not just sit
target = rung_costs[2]
window = 500
controller = BudgetController(
    target_cost=target,
    n_entries=len(ladder),
    window=window,
    hysteresis=0.05,
    current_index=0,  # start cheap, step up as windows complete
)
print(f"target {target:.3f}, window {window}, starting at the cheapest rung")
print()

# replay trace samples in random order as the "live" stream
rng = np.random.default_rng(0)
stream = (trace.sample(int(i)) for i in rng.integers(0, trace.n_data, 8000))

costs = []
indices = []
for outcome, lam in route_stream(stream, ladder, controller=controller):
    costs.append(outcome.cost)
    indices.append(controller.current_index)

# per-window means show the climb toward the band, then steady state
print(f"{'window':>7} {'mean cost':>10} {'rung at end':>12}")
for w in range(len(costs) // window):
    chunk = costs[w * window : (w + 1) * window]
    print(f"{w:7d} {sum(chunk) / window:10.4f} {indices[(w + 1) * window - 1]:12d}")

band = (target * 0.95, target * 1.05)
last = costs[-window:]
mean_last = sum(last) / window
ok = band[0] <= mean_last <= band[1]
print()
print(f"final window mean {mean_last:.4f}, "
      f"band [{band[0]:.4f}, {band[1]:.4f}] -> {'inside' if ok else 'outside'}")
