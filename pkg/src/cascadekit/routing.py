"""Cascade gating semantics and trace evaluation.

A cascade walks its expert pool in cost order. Each non-final node carries a
post-expert exit threshold (exit when the freshly computed confidence strictly
exceeds it; a threshold of exactly 1.0 disables the node outright) and every
node after the first carries a pre-expert skip threshold (skip when the last
computed confidence falls strictly below it). The final node, when computed,
always terminates the walk; if every remaining node is skipped or disabled,
the sample exits at the last node it actually computed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .trace import ExpertMeta, SampleRecord, TraceSet


class ConfigError(ValueError):
    """Invalid threshold configuration or dimension mismatch."""


def _as_unit_tuple(values, name: str) -> tuple[float, ...]:
    out = tuple(float(v) for v in values)
    for v in out:
        if not 0.0 <= v <= 1.0:
            raise ConfigError(f"{name} value {v} outside [0, 1]")
    return out


@dataclass(frozen=True)
class Config:
    """One operating point: preference weight plus both threshold vectors.

    ``t2[i]`` is the exit threshold after node i (i in 0..n_exp-2, exit on
    conf > t2[i], disabled at exactly 1.0). ``t1[j-1]`` is the skip threshold
    before node j (j in 1..n_exp-1, skip on last conf < t1[j-1]).
    """

    lam: float
    t1: tuple[float, ...]
    t2: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "t1", _as_unit_tuple(self.t1, "t1"))
        object.__setattr__(self, "t2", _as_unit_tuple(self.t2, "t2"))
        object.__setattr__(self, "lam", float(self.lam))
        if len(self.t1) != len(self.t2):
            raise ConfigError(
                f"t1 and t2 must have equal length, got {len(self.t1)} and {len(self.t2)}"
            )
        if len(self.t2) < 1:
            raise ConfigError("threshold vectors must cover at least one gate")
        if not 0.0 <= self.lam <= 1.0:
            raise ConfigError(f"lambda {self.lam} outside [0, 1]")

    @property
    def n_exp(self) -> int:
        return len(self.t2) + 1

    def replace_t1(self, index: int, value: float) -> Config:
        t1 = list(self.t1)
        t1[index] = value
        return Config(self.lam, tuple(t1), self.t2)

    def replace_t2(self, index: int, value: float) -> Config:
        t2 = list(self.t2)
        t2[index] = value
        return Config(self.lam, self.t1, tuple(t2))


def config_to_dict(config: Config) -> dict:
    return {"lambda": config.lam, "t1": list(config.t1), "t2": list(config.t2)}


def config_from_dict(obj: dict) -> Config:
    for key in ("lambda", "t1", "t2"):
        if key not in obj:
            raise ConfigError(f"config object missing key {key!r}")
    return Config(lam=obj["lambda"], t1=tuple(obj["t1"]), t2=tuple(obj["t2"]))


@dataclass(frozen=True)
class RouteOutcome:
    """Pathway of one sample through the cascade (node indices 0-based)."""

    exit_node: int
    computed: tuple[int, ...]
    final_conf: float
    cost: float
    metric: float


@dataclass(frozen=True)
class EvalReport:
    """Aggregate cost/performance/exit statistics of one Config on one trace.

    ``perf`` is the plain mean exit metric; the search-time regularizer never
    appears here.
    """

    mean_cost_raw: float
    mean_cost_norm: float
    perf: float
    mean_exit_conf: float
    n_exit: tuple[int, ...]
    n_comp: tuple[int, ...]


def _check_width(n_exp: int, config: Config) -> None:
    if config.n_exp != n_exp:
        raise ConfigError(
            f"config covers {config.n_exp} experts but the pool has {n_exp}"
        )


def enabled_nodes(n_exp: int, t2: Sequence[float]) -> list[int]:
    """Indices of nodes that may ever be computed; the last node always is."""
    nodes = [i for i in range(n_exp - 1) if t2[i] < 1.0]
    nodes.append(n_exp - 1)
    return nodes


def route_sample(
    record: SampleRecord, experts: Sequence[ExpertMeta], config: Config
) -> RouteOutcome:
    """Walk one sample through the cascade and report its pathway."""
    n_exp = len(experts)
    _check_width(n_exp, config)
    if len(record.conf) != n_exp or len(record.metric) != n_exp:
        raise ConfigError(
            f"sample {record.sample_id!r} carries {len(record.conf)} experts, pool has {n_exp}"
        )
    t1, t2 = config.t1, config.t2
    computed: list[int] = []
    last_conf = 0.0
    exit_node = -1
    for node in enabled_nodes(n_exp, t2):
        if computed and last_conf < t1[node - 1]:
            continue
        computed.append(node)
        last_conf = float(record.conf[node])
        if node == n_exp - 1 or last_conf > t2[node]:
            exit_node = node
            break
    if exit_node < 0:
        exit_node = computed[-1]
        last_conf = float(record.conf[exit_node])
    cost = 0.0
    for node in computed:
        cost += experts[node].cost
    return RouteOutcome(
        exit_node=exit_node,
        computed=tuple(computed),
        final_conf=last_conf,
        cost=cost,
        metric=float(record.metric[exit_node]),
    )


def route_mask(
    conf: np.ndarray, t1: Sequence[float], t2: Sequence[float]
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized walk of every row of a confidence matrix.

    Returns (exit_node, computed) where exit_node has one index per row and
    computed is a boolean (n_data, n_exp) matrix of which nodes ran.
    """
    n_data, n_exp = conf.shape
    computed = np.zeros((n_data, n_exp), dtype=bool)
    exit_node = np.full(n_data, -1, dtype=np.intp)
    last_node = np.zeros(n_data, dtype=np.intp)
    last_conf = np.zeros(n_data)
    active = np.ones(n_data, dtype=bool)
    seen_first = False
    for node in enabled_nodes(n_exp, t2):
        if seen_first:
            compute = active & (last_conf >= t1[node - 1])
        else:
            compute = active.copy()
            seen_first = True
        if not compute.any():
            continue
        computed[:, node] = compute
        conf_node = conf[:, node]
        if node == n_exp - 1:
            exits = compute
        else:
            exits = compute & (conf_node > t2[node])
        exit_node[exits] = node
        active &= ~exits
        carried = compute & ~exits
        last_conf = np.where(carried, conf_node, last_conf)
        last_node = np.where(carried, node, last_node)
    stranded = exit_node < 0
    exit_node[stranded] = last_node[stranded]
    return exit_node, computed


def evaluate(trace: TraceSet, config: Config) -> EvalReport:
    """Route every trace sample under ``config`` and aggregate the outcomes."""
    _check_width(trace.n_exp, config)
    exit_node, computed = route_mask(trace.conf, config.t1, config.t2)
    rows = np.arange(trace.n_data)
    n_comp = computed.sum(axis=0)
    n_exit = np.bincount(exit_node, minlength=trace.n_exp)
    cost_total = 0.0
    for i in range(trace.n_exp):
        cost_total += int(n_comp[i]) * float(trace.costs[i])
    mean_cost_raw = cost_total / trace.n_data
    return EvalReport(
        mean_cost_raw=mean_cost_raw,
        mean_cost_norm=mean_cost_raw / float(trace.costs[-1]),
        perf=float(np.sum(trace.metric[rows, exit_node])) / trace.n_data,
        mean_exit_conf=float(np.sum(trace.conf[rows, exit_node])) / trace.n_data,
        n_exit=tuple(int(c) for c in n_exit),
        n_comp=tuple(int(c) for c in n_comp),
    )


def check_dimensions(trace: TraceSet, config: Config) -> None:
    """Raise ConfigError unless ``config`` matches the trace's expert count."""
    _check_width(trace.n_exp, config)
