"""Threshold search: regularized objective plus per-coordinate grid descent.

For each preference weight the search first tunes the exit thresholds
(starting from the everything-to-the-last-expert state where every non-final
node is disabled), then tunes the skip thresholds with the exit thresholds
frozen. Every round scans each coordinate over the full candidate grid and
adopts only the single best strictly improving move, so it terminates at a
configuration no single-coordinate grid change can improve.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .routing import Config, check_dimensions, evaluate, route_mask
from .trace import TraceSet

if TYPE_CHECKING:
    from .configset import ConfigCollection

DEFAULT_DELTA = 0.01
DEFAULT_ALPHA = 2.0
DEFAULT_BETA = 0.2
DEFAULT_MAX_ROUNDS = 100

# Tolerance for recognizing that the candidate grid's last multiple of delta
# already equals 1.0 up to float rounding.
_GRID_SNAP = 1e-9


@dataclass(frozen=True)
class SearchParams:
    """Knobs of the threshold search."""

    lambda_grid: tuple[float, ...]
    delta: float = DEFAULT_DELTA
    alpha: float = DEFAULT_ALPHA
    beta: float = DEFAULT_BETA
    max_rounds: int = DEFAULT_MAX_ROUNDS

    def __post_init__(self) -> None:
        grid = tuple(float(v) for v in self.lambda_grid)
        object.__setattr__(self, "lambda_grid", grid)
        for v in grid:
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"lambda value {v} outside [0, 1]")
        for a, b in zip(grid, grid[1:]):
            if b <= a:
                raise ValueError(f"lambda_grid not strictly ascending at {a} -> {b}")
        if not 0.0 < self.delta <= 0.5:
            raise ValueError(f"delta must be in (0, 0.5], got {self.delta}")
        if self.alpha < 0.0 or self.beta < 0.0:
            raise ValueError("alpha and beta must be non-negative")
        if self.max_rounds < 1:
            raise ValueError(f"max_rounds must be >= 1, got {self.max_rounds}")


def params_to_dict(params: SearchParams) -> dict:
    return {
        "lambda_grid": list(params.lambda_grid),
        "delta": params.delta,
        "alpha": params.alpha,
        "beta": params.beta,
        "max_rounds": params.max_rounds,
    }


def params_from_dict(obj: dict) -> SearchParams:
    try:
        return SearchParams(
            lambda_grid=tuple(obj["lambda_grid"]),
            delta=float(obj["delta"]),
            alpha=float(obj["alpha"]),
            beta=float(obj["beta"]),
            max_rounds=int(obj["max_rounds"]),
        )
    except KeyError as exc:
        raise ValueError(f"search params object missing key {exc.args[0]!r}") from exc


def threshold_grid(delta: float) -> tuple[float, ...]:
    """Candidate thresholds {0, delta, 2*delta, ...} with an exact final 1.0."""
    steps = int(math.floor(1.0 / delta + _GRID_SNAP))
    vals = [k * delta for k in range(steps + 1)]
    if abs(vals[-1] - 1.0) <= _GRID_SNAP:
        vals[-1] = 1.0
    else:
        vals.append(1.0)
    return tuple(vals)


@dataclass(frozen=True)
class ObjectiveBreakdown:
    """Objective value of one config plus the terms it combines."""

    f: float
    cost_term: float
    perf_term_regularized: float
    reg: tuple[float, ...]


def regularizers(
    trace: TraceSet, lam: float, alpha: float, beta: float
) -> tuple[float, ...]:
    """Per-node discount on exited performance; weak experts are discounted
    harder as lam grows, floored at zero."""
    out = []
    for mp in trace.mean_perfs:
        r = 1.0 - (alpha * lam + beta) * (1.0 - float(mp))
        out.append(r if r > 0.0 else 0.0)
    return tuple(out)


def objective(trace: TraceSet, config: Config, params: SearchParams) -> ObjectiveBreakdown:
    """Search objective: cost weighted against regularizer-discounted
    performance at the config's own preference weight."""
    check_dimensions(trace, config)
    exit_node, computed = route_mask(trace.conf, config.t1, config.t2)
    n_comp = computed.sum(axis=0)
    cost_total = 0.0
    for i in range(trace.n_exp):
        cost_total += int(n_comp[i]) * float(trace.costs[i])
    cost_term = cost_total / trace.n_data / float(trace.costs[-1])

    rows = np.arange(trace.n_data)
    metric_sums = np.bincount(
        exit_node, weights=trace.metric[rows, exit_node], minlength=trace.n_exp
    )
    reg = regularizers(trace, config.lam, params.alpha, params.beta)
    perf_sum = 0.0
    for i in range(trace.n_exp):
        perf_sum += float(metric_sums[i]) * reg[i]
    perf_term = perf_sum / trace.n_data

    lam = config.lam
    return ObjectiveBreakdown(
        f=(1.0 - lam) * cost_term + lam * (1.0 - perf_term),
        cost_term=cost_term,
        perf_term_regularized=perf_term,
        reg=reg,
    )


def minimize_1d(
    trace: TraceSet,
    config: Config,
    node: int,
    which: str,
    lam: float,
    params: SearchParams,
) -> tuple[float, float]:
    """Exhaustive scan of one threshold coordinate over the candidate grid.

    ``node`` indexes the threshold vector itself: "post" scans t2[node] (the
    exit gate after node ``node``), "pre" scans t1[node] (the skip gate before
    node ``node``+1). Ties go to the smaller threshold.
    """
    if which not in ("pre", "post"):
        raise ValueError(f'which must be "pre" or "post", got {which!r}')
    if not 0 <= node < config.n_exp - 1:
        raise ValueError(f"gate index {node} out of range for {config.n_exp} experts")
    base = Config(lam, config.t1, config.t2)
    best_t = 0.0
    best_f = math.inf
    for cand in threshold_grid(params.delta):
        trial = base.replace_t2(node, cand) if which == "post" else base.replace_t1(node, cand)
        f = objective(trace, trial, params).f
        if f < best_f:
            best_f = f
            best_t = cand
    return best_t, best_f


def _descend(
    trace: TraceSet, config: Config, which: str, lam: float, params: SearchParams
) -> Config:
    f_cur = objective(trace, config, params).f
    for _ in range(params.max_rounds):
        best: tuple[float, int, float] | None = None
        for node in range(config.n_exp - 1):
            t, f = minimize_1d(trace, config, node, which, lam, params)
            if f < f_cur and (best is None or f < best[0]):
                best = (f, node, t)
        if best is None:
            return config
        f_cur = best[0]
        if which == "post":
            config = config.replace_t2(best[1], best[2])
        else:
            config = config.replace_t1(best[1], best[2])
    return config


def search_t2(trace: TraceSet, lam: float, params: SearchParams) -> Config:
    """Tune exit thresholds from the all-disabled start; skip gates stay 0."""
    width = trace.n_exp - 1
    init = Config(lam, (0.0,) * width, (1.0,) * width)
    return _descend(trace, init, "post", lam, params)


def search_t1(
    trace: TraceSet, config_with_t2: Config, lam: float, params: SearchParams
) -> Config:
    """Tune skip thresholds from all-zeros with exit thresholds frozen."""
    init = Config(lam, (0.0,) * (config_with_t2.n_exp - 1), config_with_t2.t2)
    return _descend(trace, init, "pre", lam, params)


def search_single(trace: TraceSet, lam: float, params: SearchParams) -> Config:
    """Full two-stage search for one preference weight."""
    return search_t1(trace, search_t2(trace, lam, params), lam, params)


def search_collection(
    trace: TraceSet, params: SearchParams, threads: int = 1
) -> "ConfigCollection":
    """Run the two-stage search for every grid lambda and package the results
    with their calibration reports."""
    from .configset import CollectionEntry, ConfigCollection

    def one(lam: float) -> CollectionEntry:
        config = search_single(trace, lam, params)
        return CollectionEntry(config=config, report=evaluate(trace, config))

    lams = params.lambda_grid
    if threads > 1 and len(lams) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            entries = tuple(pool.map(one, lams))
    else:
        entries = tuple(one(lam) for lam in lams)
    return ConfigCollection(
        trace_id=trace.trace_id,
        params=params,
        experts=trace.experts,
        entries=entries,
    )
