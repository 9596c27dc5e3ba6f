from __future__ import annotations

import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cascadekit import TraceError, TraceFormatError, TraceSet, expert_stats
from cascadekit.trace import (
    canonical_bytes,
    load_trace,
    synth_target_accuracies,
    synth_trace,
    write_trace,
)

from reference_trace import T3_CONF, T3_COSTS, T3_IDS, T3_METRIC, make_t3


def trace_text(header: dict, samples: list[dict]) -> str:
    lines = [json.dumps(header)] + [json.dumps(s) for s in samples]
    return "\n".join(lines) + "\n"


def valid_header() -> dict:
    return {
        "type": "header",
        "version": 1,
        "experts": [
            {"name": "tiny", "cost": 1},
            {"name": "mid", "cost": 4},
            {"name": "big", "cost": 16},
        ],
    }


def valid_samples() -> list[dict]:
    return [
        {"id": sid, "conf": conf, "metric": [float(m) for m in metric]}
        for sid, conf, metric in zip(T3_IDS, T3_CONF, T3_METRIC)
    ]


def test_t3_construction():
    t3 = make_t3()
    assert t3.n_exp == 3
    assert t3.n_data == 4
    assert [e.mean_perf for e in t3.experts] == [0.25, 0.5, 0.75]
    assert list(t3.costs) == T3_COSTS
    assert t3.sample(1).sample_id == "s2"


def test_load_valid_file(tmp_path):
    path = tmp_path / "t3.jsonl"
    path.write_text(trace_text(valid_header(), valid_samples()))
    trace = load_trace(path)
    assert trace.n_exp == 3
    assert trace.n_data == 4
    assert [e.name for e in trace.experts] == ["tiny", "mid", "big"]


def test_round_trip_byte_identity(tmp_path):
    t3 = make_t3()
    path = tmp_path / "trace.jsonl"
    write_trace(t3, path)
    raw = path.read_bytes()
    again = tmp_path / "again.jsonl"
    write_trace(load_trace(path), again)
    assert again.read_bytes() == raw


def test_unknown_keys_ignored(tmp_path):
    header = valid_header()
    header["comment"] = "extra"
    samples = valid_samples()
    samples[0]["note"] = [1, 2, 3]
    path = tmp_path / "t.jsonl"
    path.write_text(trace_text(header, samples))
    trace = load_trace(path)
    assert trace.n_data == 4


def test_declared_mean_perf_checked(tmp_path):
    header = valid_header()
    header["experts"][0]["mean_perf"] = 0.25
    path = tmp_path / "ok.jsonl"
    path.write_text(trace_text(header, valid_samples()))
    assert load_trace(path).experts[0].mean_perf == 0.25

    header["experts"][0]["mean_perf"] = 0.9
    bad = tmp_path / "bad.jsonl"
    bad.write_text(trace_text(header, valid_samples()))
    with pytest.raises(TraceError, match="mean_perf"):
        load_trace(bad)


@pytest.mark.parametrize(
    "mutate, message",
    [
        (lambda h, s: s[1].__setitem__("conf", [0.6, 1.3, 0.95]), r"s2.*conf.*1\.3"),
        (lambda h, s: h["experts"].__setitem__(0, {"name": "a", "cost": 4}), "ascending"),
        (lambda h, s: s.clear(), "no sample"),
        (lambda h, s: h.__setitem__("version", 99), "version"),
        (lambda h, s: s[0].pop("metric"), "metric"),
        (lambda h, s: s[0].__setitem__("conf", [0.5, 0.5]), "3 numbers"),
        (lambda h, s: h["experts"][1].__setitem__("cost", -2), "cost"),
        (lambda h, s: h.__setitem__("experts", h["experts"][:1]), "2 experts"),
        (lambda h, s: s[0].__setitem__("conf", [0.1, "x", 0.2]), "non-numeric"),
    ],
)
def test_load_rejects_corruptions(tmp_path, mutate, message):
    header = valid_header()
    samples = valid_samples()
    mutate(header, samples)
    path = tmp_path / "bad.jsonl"
    path.write_text(trace_text(header, samples))
    with pytest.raises(TraceError, match=message):
        load_trace(path)


def test_load_reports_line_numbers(tmp_path):
    path = tmp_path / "bad.jsonl"
    lines = trace_text(valid_header(), valid_samples()).splitlines()
    lines[2] = "{not json"
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(TraceFormatError, match="line 3"):
        load_trace(path)


def test_load_missing_header(tmp_path):
    path = tmp_path / "headless.jsonl"
    path.write_text("\n".join(json.dumps(s) for s in valid_samples()) + "\n")
    with pytest.raises(TraceFormatError, match="header"):
        load_trace(path)


def test_empty_file(tmp_path):
    path = tmp_path / "empty.jsonl"
    path.write_text("")
    with pytest.raises(TraceFormatError, match="empty"):
        load_trace(path)


def test_traceset_rejects_bad_shapes():
    with pytest.raises(TraceError, match="ascending"):
        TraceSet.from_arrays(["a", "b"], [4, 4], [[0.1, 0.2]], [[1.0, 1.0]])
    with pytest.raises(TraceError, match="outside"):
        TraceSet.from_arrays(["a", "b"], [1, 4], [[0.1, 1.7]], [[1.0, 1.0]])
    with pytest.raises(TraceError, match="2 experts"):
        TraceSet.from_arrays(["a"], [1], [[0.1]], [[1.0]])


def test_traceset_immutable():
    t3 = make_t3()
    with pytest.raises(ValueError):
        t3.conf[0, 0] = 0.5
    with pytest.raises(ValueError):
        t3.costs[0] = 9.0


def test_trace_id_tracks_content():
    a = make_t3()
    assert a.trace_id == make_t3().trace_id
    conf = [row[:] for row in T3_CONF]
    conf[0][0] = 0.94
    b = TraceSet.from_arrays(["tiny", "mid", "big"], T3_COSTS, conf, T3_METRIC, T3_IDS)
    assert a.trace_id != b.trace_id


def test_synth_deterministic():
    a = synth_trace(3, 1000, 42, 0.5)
    b = synth_trace(3, 1000, 42, 0.5)
    assert canonical_bytes(a) == canonical_bytes(b)
    c = synth_trace(3, 1000, 43, 0.5)
    assert canonical_bytes(a) != canonical_bytes(c)


@settings(deadline=None, max_examples=30)
@given(
    n_experts=st.integers(2, 7),
    n_samples=st.integers(50, 400),
    seed=st.integers(0, 10_000),
    skew=st.floats(0.1, 1.0),
)
def test_synth_mean_perf_strictly_ascending(n_experts, n_samples, seed, skew):
    trace = synth_trace(n_experts, n_samples, seed, skew)
    perfs = [e.mean_perf for e in trace.experts]
    assert all(a < b for a, b in zip(perfs, perfs[1:]))
    assert all(0.0 <= p <= 1.0 for p in perfs)


def test_synth_hits_target_accuracies():
    trace = synth_trace(2, 5000, 7, 0.5)
    targets = synth_target_accuracies(2)
    for expert, target in zip(trace.experts, targets):
        assert abs(expert.mean_perf - target) <= 0.03


def test_synth_rejects_bad_args():
    with pytest.raises(TraceError):
        synth_trace(1, 100, 0, 0.5)
    with pytest.raises(TraceError):
        synth_trace(3, 0, 0, 0.5)
    with pytest.raises(TraceError):
        synth_trace(3, 100, 0, 0.0)
    with pytest.raises(TraceError):
        synth_trace(3, 100, 0, 1.5)
    with pytest.raises(TraceError):
        synth_trace(9, 4, 0, 0.5)


def test_expert_stats_t3():
    stats = expert_stats(make_t3())
    assert stats[0].mean_perf == 0.25
    assert stats[2].mean_perf == 0.75
    for s in stats:
        assert s.bin_edges[0] == 0.0
        assert s.bin_edges[-1] == 1.0
        assert sum(s.conf_hist) == 4


def test_expert_stats_degenerate_single_sample():
    trace = TraceSet.from_arrays(["a", "b"], [1, 2], [[0.3, 0.6]], [[1.0, 1.0]])
    assert [s.mean_perf for s in expert_stats(trace)] == [1.0, 1.0]


@settings(deadline=None, max_examples=25)
@given(data=st.data())
def test_round_trip_random_traces(tmp_path_factory, data):
    n_exp = data.draw(st.integers(2, 5))
    n_data = data.draw(st.integers(1, 8))
    unit = st.floats(0.0, 1.0, allow_nan=False)
    conf = data.draw(
        st.lists(st.lists(unit, min_size=n_exp, max_size=n_exp), min_size=n_data, max_size=n_data)
    )
    metric = data.draw(
        st.lists(st.lists(unit, min_size=n_exp, max_size=n_exp), min_size=n_data, max_size=n_data)
    )
    costs = [2.0**k + data.draw(st.floats(0.0, 0.5)) for k in range(n_exp)]
    trace = TraceSet.from_arrays([f"e{k}" for k in range(n_exp)], costs, conf, metric)
    path = tmp_path_factory.mktemp("rt") / "trace.jsonl"
    write_trace(trace, path)
    loaded = load_trace(path)
    assert canonical_bytes(loaded) == canonical_bytes(trace)
    assert np.array_equal(loaded.conf, trace.conf)
    assert np.array_equal(loaded.metric, trace.metric)
