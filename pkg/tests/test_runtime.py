from __future__ import annotations

import pytest

from cascadekit import (
    BudgetController,
    CollectionEntry,
    Config,
    ConfigCollection,
    SearchParams,
    StreamError,
    controller_step,
    evaluate,
    nearest_cost_index,
    route_stream,
    snap_index,
)

from reference_trace import make_t3


def ladder(trace, configs):
    entries = tuple(
        CollectionEntry(config=c, report=evaluate(trace, c)) for c in configs
    )
    return ConfigCollection(
        trace_id=trace.trace_id,
        params=SearchParams(lambda_grid=tuple(c.lam for c in configs), delta=0.25),
        experts=trace.experts,
        entries=entries,
    )


@pytest.fixture
def rungs(t3):
    return ladder(
        t3,
        (
            Config(0.1, (0.0, 0.0), (0.0, 0.0)),
            Config(0.5, (0.0, 0.25), (0.8, 0.8)),
            Config(0.9, (0.0, 0.0), (1.0, 1.0)),
        ),
    )


def test_snap_index_nearest_and_tie_low(t3, rungs):
    assert snap_index(rungs, 0.0) == 0
    assert snap_index(rungs, 0.49) == 1
    assert snap_index(rungs, 1.0) == 2
    assert snap_index(rungs, 0.5) == 1
    # exact tie: 0.5 sits dead center between 0.25 and 0.75
    pair = ladder(
        t3,
        (Config(0.25, (0.0, 0.0), (0.8, 0.8)), Config(0.75, (0.0, 0.0), (0.9, 0.9))),
    )
    assert snap_index(pair, 0.5) == 0


def test_nearest_cost_index(rungs):
    costs = [e.report.mean_cost_raw for e in rungs.entries]
    assert costs == sorted(costs)
    assert nearest_cost_index(rungs, 0.0) == 0
    assert nearest_cost_index(rungs, costs[1]) == 1
    assert nearest_cost_index(rungs, 1e9) == 2
    midpoint = (costs[0] + costs[1]) / 2.0
    assert nearest_cost_index(rungs, midpoint) == 0


def test_stream_matches_batch_evaluate(t3, rungs):
    outcomes = list(route_stream(t3.samples, rungs, initial_lam=0.5))
    assert len(outcomes) == t3.n_data
    assert all(lam == 0.5 for _, lam in outcomes)
    report = evaluate(t3, rungs.entries[1].config)
    assert sum(o.cost for o, _ in outcomes) / t3.n_data == report.mean_cost_raw
    exits = [0] * t3.n_exp
    for o, _ in outcomes:
        exits[o.exit_node] += 1
    assert tuple(exits) == report.n_exit


def test_stream_requires_start_or_controller(t3, rungs):
    with pytest.raises(StreamError, match="initial lambda or a controller"):
        list(route_stream(t3.samples, rungs))
    bare = ConfigCollection(
        trace_id=rungs.trace_id,
        params=rungs.params,
        experts=None,
        entries=rungs.entries,
    )
    with pytest.raises(StreamError, match="expert costs"):
        list(route_stream(t3.samples, bare, initial_lam=0.5))
    empty = ConfigCollection(
        trace_id=rungs.trace_id, params=rungs.params, experts=t3.experts, entries=()
    )
    with pytest.raises(StreamError, match="no entries"):
        list(route_stream(t3.samples, empty, initial_lam=0.5))


def test_controller_switches_at_sample_boundaries(t3, rungs):
    # window=2 and a huge target: every completed window steps the index up
    controller = BudgetController(
        target_cost=100.0, n_entries=3, window=2, hysteresis=0.05, current_index=0
    )
    stream = route_stream(t3.samples, rungs, controller=controller)
    lams = [lam for _, lam in stream]
    # samples 1-2 on rung 0, window closes after sample 2, samples 3-4 on rung 1
    assert lams == [0.1, 0.1, 0.5, 0.5]
    assert controller.current_index == 2


def test_controller_step_decisions():
    c = BudgetController(target_cost=0.3, n_entries=5, window=4, current_index=2)
    assert controller_step(c, 0.4) == 1  # too expensive: step down
    assert controller_step(c, 0.2) == 3  # too cheap: step up
    assert controller_step(c, 0.3) == 2  # in band: hold
    assert controller_step(c, 0.3 * 1.05) == 2  # band edges are inclusive
    assert controller_step(c, 0.3 * 0.95) == 2
    low = BudgetController(target_cost=0.3, n_entries=5, window=4, current_index=0)
    assert controller_step(low, 99.0) == 0  # clamped at the bottom
    high = BudgetController(target_cost=0.3, n_entries=5, window=4, current_index=4)
    assert controller_step(high, 0.0) == 4  # clamped at the top


def test_observe_resets_window():
    c = BudgetController(target_cost=10.0, n_entries=3, window=3, current_index=1)
    assert c.observe(100.0) == 1
    assert c.observe(100.0) == 1
    assert c.observe(100.0) == 0  # window mean 100 > 10.5: step down
    # next window starts fresh; two cheap samples don't trigger early
    assert c.observe(0.0) == 0
    assert c.observe(0.0) == 0
    assert c.observe(0.0) == 1


def test_controller_validation():
    with pytest.raises(ValueError, match="target_cost"):
        BudgetController(target_cost=0.0, n_entries=3)
    with pytest.raises(ValueError, match="window"):
        BudgetController(target_cost=1.0, n_entries=3, window=0)
    with pytest.raises(ValueError, match="hysteresis"):
        BudgetController(target_cost=1.0, n_entries=3, hysteresis=-0.1)
    with pytest.raises(ValueError, match="non-empty"):
        BudgetController(target_cost=1.0, n_entries=0)
    with pytest.raises(ValueError, match="out of range"):
        BudgetController(target_cost=1.0, n_entries=3, current_index=3)


def test_stream_is_lazy(rungs):
    def exploding():
        t3 = make_t3()
        yield t3.sample(0)
        raise RuntimeError("should not be pulled")

    stream = route_stream(exploding(), rungs, initial_lam=0.1)
    outcome, lam = next(stream)
    assert lam == 0.1
    assert outcome.exit_node == 0
