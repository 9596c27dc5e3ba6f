"""Trace-driven construction, threshold search, and budgeted streaming for
confidence-gated expert cascades."""

from .configset import (
    CollectionEntry,
    CollectionError,
    ConfigCollection,
    interpolate,
    load_collection,
    monotonic_filter,
    pareto_filter,
    save_collection,
)
from .gate import (
    GateError,
    GateModel,
    RankingBatch,
    TrainCfg,
    confidence,
    init_model,
    load_features,
    load_model,
    loss_gradient,
    pairwise_loss,
    pairwise_target,
    ranking_accuracy,
    save_model,
    train,
)
from .routing import (
    Config,
    ConfigError,
    EvalReport,
    RouteOutcome,
    evaluate,
    route_sample,
)
from .runtime import (
    BudgetController,
    StreamError,
    controller_step,
    nearest_cost_index,
    route_stream,
    snap_index,
)
from .search import (
    ObjectiveBreakdown,
    SearchParams,
    minimize_1d,
    objective,
    search_collection,
    search_single,
    search_t1,
    search_t2,
    threshold_grid,
)
from .trace import (
    ExpertMeta,
    SampleRecord,
    TraceError,
    TraceFormatError,
    TraceSet,
    expert_stats,
    load_trace,
    synth_trace,
    write_trace,
)

__version__ = "0.1.0"

__all__ = [
    "BudgetController",
    "CollectionEntry",
    "CollectionError",
    "Config",
    "ConfigCollection",
    "ConfigError",
    "EvalReport",
    "ExpertMeta",
    "GateError",
    "GateModel",
    "ObjectiveBreakdown",
    "RankingBatch",
    "RouteOutcome",
    "SampleRecord",
    "SearchParams",
    "StreamError",
    "TraceError",
    "TraceFormatError",
    "TraceSet",
    "TrainCfg",
    "confidence",
    "controller_step",
    "evaluate",
    "expert_stats",
    "init_model",
    "interpolate",
    "load_collection",
    "load_features",
    "load_model",
    "load_trace",
    "loss_gradient",
    "minimize_1d",
    "monotonic_filter",
    "nearest_cost_index",
    "objective",
    "pairwise_loss",
    "pairwise_target",
    "pareto_filter",
    "ranking_accuracy",
    "route_sample",
    "route_stream",
    "save_collection",
    "save_model",
    "search_collection",
    "search_single",
    "search_t1",
    "search_t2",
    "snap_index",
    "synth_trace",
    "threshold_grid",
    "train",
    "write_trace",
]
