"""Four-sample, three-expert regression trace shared across the suite."""

from __future__ import annotations

from cascadekit import TraceSet

T3_CONF = [
    [0.95, 0.97, 0.99],
    [0.60, 0.90, 0.95],
    [0.20, 0.55, 0.90],
    [0.10, 0.30, 0.40],
]
T3_METRIC = [
    [1, 1, 1],
    [0, 1, 1],
    [0, 0, 1],
    [0, 0, 0],
]
T3_COSTS = [1.0, 4.0, 16.0]
T3_IDS = ["s1", "s2", "s3", "s4"]


def make_t3() -> TraceSet:
    return TraceSet.from_arrays(
        names=["tiny", "mid", "big"],
        costs=T3_COSTS,
        conf=T3_CONF,
        metric=T3_METRIC,
        sample_ids=T3_IDS,
    )
