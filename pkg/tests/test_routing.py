from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cascadekit import Config, ConfigError, TraceSet, evaluate, route_sample
from cascadekit.routing import config_from_dict, config_to_dict, route_mask

from reference_trace import make_t3
from oracle import oracle_evaluate, oracle_route


def test_config_validation():
    with pytest.raises(ConfigError, match="outside"):
        Config(0.5, (0.0, 1.2), (0.5, 0.5))
    with pytest.raises(ConfigError, match="lambda"):
        Config(1.5, (0.0, 0.0), (0.5, 0.5))
    with pytest.raises(ConfigError, match="equal length"):
        Config(0.5, (0.0,), (0.5, 0.5))


def test_config_json_round_trip(c0):
    obj = config_to_dict(c0)
    assert set(obj) == {"lambda", "t1", "t2"}
    assert config_from_dict(obj) == c0
    with pytest.raises(ConfigError, match="t2"):
        config_from_dict({"lambda": 0.5, "t1": [0.1]})


def test_route_s1_under_c0(t3, c0):
    out = route_sample(t3.sample(0), t3.experts, c0)
    assert out.exit_node == 0
    assert out.computed == (0,)
    assert out.cost == 1.0
    assert out.metric == 1.0
    assert out.final_conf == 0.95


def test_route_s3_under_c1(t3, c1):
    # 0.20 < 0.25 skips the middle node, 0.20 < 0.35 skips the last.
    out = route_sample(t3.sample(2), t3.experts, c1)
    assert out.exit_node == 0
    assert out.computed == (0,)
    assert out.cost == 1.0
    assert out.metric == 0.0
    assert out.final_conf == 0.20


def test_route_s4_under_c0(t3, c0):
    out = route_sample(t3.sample(3), t3.experts, c0)
    assert out.exit_node == 2
    assert out.computed == (0, 1, 2)
    assert out.cost == 21.0
    assert out.metric == 0.0


def test_zero_thresholds_exit_first_node(t3):
    config = Config(0.5, (0.0, 0.0), (0.0, 0.0))
    for i in range(t3.n_data):
        out = route_sample(t3.sample(i), t3.experts, config)
        assert out.exit_node == 0


def test_equality_boundaries():
    # conf == t2 does not exit; conf == t1 does not skip.
    trace = TraceSet.from_arrays(
        ["a", "b"], [1, 2], [[0.8, 0.9]], [[0.0, 1.0]], ["x"]
    )
    stay = Config(0.5, (0.8,), (0.8,))
    out = route_sample(trace.sample(0), trace.experts, stay)
    assert out.exit_node == 1
    assert out.computed == (0, 1)


def test_disabled_first_node_unreachable(t3):
    config = Config(0.5, (0.9, 0.9), (1.0, 0.0))
    # Node 0 disabled: node 1 becomes the entry point and is always computed,
    # despite a high skip threshold, because nothing was computed before it.
    out = route_sample(t3.sample(3), t3.experts, config)
    assert out.computed[0] == 1
    report = evaluate(t3, config)
    assert report.n_comp[0] == 0


def test_evaluate_c0(t3, c0):
    report = evaluate(t3, c0)
    assert report.mean_cost_raw == 12.0
    assert report.perf == 0.75
    assert report.mean_cost_norm == 0.75
    assert report.n_exit == (1, 1, 2)
    assert report.n_comp == (4, 3, 2)
    assert report.mean_exit_conf == pytest.approx((0.95 + 0.90 + 0.90 + 0.40) / 4)


def test_evaluate_c1(t3, c1):
    report = evaluate(t3, c1)
    assert report.mean_cost_raw == 2.0
    assert report.perf == 0.5
    assert report.n_exit == (3, 1, 0)
    assert report.n_comp == (4, 1, 0)


def test_evaluate_all_disabled_goes_last(t3):
    report = evaluate(t3, Config(0.5, (0.0, 0.0), (1.0, 1.0)))
    assert report.mean_cost_raw == 16.0
    assert report.mean_cost_norm == 1.0
    assert report.perf == 0.75
    assert report.n_exit == (0, 0, 4)


def test_dimension_mismatch(t3):
    with pytest.raises(ConfigError, match="3"):
        evaluate(t3, Config(0.5, (0.0,), (0.5,)))
    with pytest.raises(ConfigError):
        route_sample(t3.sample(0), t3.experts, Config(0.5, (0.0,), (0.5,)))


# Property tests over randomized traces and configs. Confidences and
# thresholds share a coarse value set so boundary collisions are frequent.

LEVELS = [0.0, 0.2, 0.25, 0.4, 0.5, 0.6, 0.75, 0.8, 1.0]


@st.composite
def trace_and_config(draw):
    n_exp = draw(st.integers(2, 5))
    n_data = draw(st.integers(1, 30))
    level = st.sampled_from(LEVELS)
    conf = [[draw(level) for _ in range(n_exp)] for _ in range(n_data)]
    metric = [
        [float(draw(st.integers(0, 1))) for _ in range(n_exp)] for _ in range(n_data)
    ]
    costs = sorted(draw(st.sets(st.integers(1, 100), min_size=n_exp, max_size=n_exp)))
    trace = TraceSet.from_arrays(
        [f"e{k}" for k in range(n_exp)], [float(c) for c in costs], conf, metric
    )
    t1 = tuple(draw(level) for _ in range(n_exp - 1))
    t2 = tuple(draw(level) for _ in range(n_exp - 1))
    lam = draw(st.sampled_from([0.0, 0.3, 0.5, 1.0]))
    return trace, Config(lam, t1, t2)


@settings(deadline=None, max_examples=120)
@given(tc=trace_and_config())
def test_matches_oracle(tc):
    trace, config = tc
    report = evaluate(trace, config)
    ref = oracle_evaluate(
        trace.conf.tolist(),
        trace.metric.tolist(),
        list(trace.costs),
        config.t1,
        config.t2,
    )
    assert report.n_exit == tuple(ref.n_exit)
    assert report.n_comp == tuple(ref.n_comp)
    assert report.mean_cost_raw == ref.mean_cost_raw
    assert report.perf == pytest.approx(ref.perf, abs=1e-12)
    assert report.mean_exit_conf == pytest.approx(ref.mean_exit_conf, abs=1e-12)


@settings(deadline=None, max_examples=120)
@given(tc=trace_and_config())
def test_exit_conservation_and_cost_identity(tc):
    trace, config = tc
    report = evaluate(trace, config)
    assert sum(report.n_exit) == trace.n_data
    assert all(e <= c for e, c in zip(report.n_exit, report.n_comp))
    per_sample = [
        route_sample(trace.sample(i), trace.experts, config).cost
        for i in range(trace.n_data)
    ]
    assert report.mean_cost_raw == sum(per_sample) / trace.n_data


@settings(deadline=None, max_examples=80)
@given(tc=trace_and_config(), data=st.data())
def test_post_gate_monotone(tc, data):
    trace, config = tc
    node = data.draw(st.integers(0, trace.n_exp - 2))
    low = data.draw(st.sampled_from([v for v in LEVELS if v < 1.0]))
    high = data.draw(st.sampled_from([v for v in LEVELS if low <= v < 1.0]))
    base = evaluate(trace, config.replace_t2(node, low))
    bumped = evaluate(trace, config.replace_t2(node, high))
    assert bumped.n_exit[node] <= base.n_exit[node]
    assert sum(bumped.n_exit[node + 1 :]) >= sum(base.n_exit[node + 1 :])


@settings(deadline=None, max_examples=80)
@given(tc=trace_and_config(), data=st.data())
def test_pre_gate_monotone(tc, data):
    trace, config = tc
    gate = data.draw(st.integers(0, trace.n_exp - 2))
    low = data.draw(st.sampled_from(LEVELS))
    high = data.draw(st.sampled_from([v for v in LEVELS if v >= low]))
    base = evaluate(trace, config.replace_t1(gate, low))
    bumped = evaluate(trace, config.replace_t1(gate, high))
    assert bumped.n_comp[gate + 1] <= base.n_comp[gate + 1]


@settings(deadline=None, max_examples=80)
@given(tc=trace_and_config(), data=st.data())
def test_disabled_node_never_computed(tc, data):
    trace, config = tc
    node = data.draw(st.integers(0, trace.n_exp - 2))
    report = evaluate(trace, config.replace_t2(node, 1.0))
    assert report.n_comp[node] == 0
    assert report.n_exit[node] == 0


def test_route_mask_matches_route_sample(t3, c0, c1):
    for config in (c0, c1):
        exit_node, computed = route_mask(t3.conf, config.t1, config.t2)
        for i in range(t3.n_data):
            out = route_sample(t3.sample(i), t3.experts, config)
            assert exit_node[i] == out.exit_node
            assert tuple(np.flatnonzero(computed[i])) == out.computed
