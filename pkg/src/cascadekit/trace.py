"""Trace substrate: expert pool metadata plus per-sample confidence/metric records.

A trace replaces live model inference everywhere in this package: every
search and evaluation step reads pre-recorded (confidence, metric) pairs
for each sample under each expert, together with a fixed per-expert cost.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

TRACE_VERSION = 1

# Mean-metric declared in a trace header must match the recomputed column
# mean to this tolerance.
MEAN_PERF_TOL = 1e-12

# Synthetic generator schedule: per-expert target accuracy is linear between
# these bounds, and expert i costs COST _BASE**i units.
SYNTH_ACC_LO = 0.62
SYNTH_ACC_HI = 0.93
SYNTH_COST_BASE = 2.0


class TraceError(ValueError):
    """Invalid trace content."""


class TraceFormatError(TraceError):
    """Malformed trace file; carries the offending 1-based line number."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class ExpertMeta:
    """One expert in the cascade, ordered by ``cost`` within its pool."""

    index: int
    name: str
    cost: float
    mean_perf: float


@dataclass(frozen=True, eq=False)
class SampleRecord:
    """Per-sample row: one confidence and one metric value per expert."""

    sample_id: str
    conf: np.ndarray
    metric: np.ndarray


def _as_matrix(values, name: str, n_data: int, n_exp: int) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.shape != (n_data, n_exp):
        raise TraceError(f"{name} must have shape ({n_data}, {n_exp}), got {arr.shape}")
    if not np.isfinite(arr).all():
        raise TraceError(f"{name} contains non-finite values")
    if (arr < 0.0).any() or (arr > 1.0).any():
        raise TraceError(f"{name} contains values outside [0, 1]")
    arr = np.ascontiguousarray(arr)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class TraceSet:
    """Immutable per-sample, per-expert trace. Safe for concurrent reads."""

    experts: tuple[ExpertMeta, ...]
    sample_ids: tuple[str, ...]
    conf: np.ndarray
    metric: np.ndarray
    costs: np.ndarray = field(init=False, repr=False, compare=False)
    mean_perfs: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        n_exp = len(self.experts)
        n_data = len(self.sample_ids)
        if n_exp < 2:
            raise TraceError(f"need at least 2 experts, got {n_exp}")
        if n_data < 1:
            raise TraceError("trace has no samples")
        object.__setattr__(self, "conf", _as_matrix(self.conf, "conf", n_data, n_exp))
        object.__setattr__(self, "metric", _as_matrix(self.metric, "metric", n_data, n_exp))

        costs = np.array([e.cost for e in self.experts], dtype=np.float64)
        if (costs <= 0.0).any():
            raise TraceError("expert costs must be positive")
        if not (np.diff(costs) > 0.0).all():
            raise TraceError(
                "expert costs must be strictly ascending, got "
                + ", ".join(f"{e.name}={e.cost}" for e in self.experts)
            )
        col_means = self.metric.mean(axis=0)
        for e, m in zip(self.experts, col_means):
            if abs(e.mean_perf - m) > MEAN_PERF_TOL:
                raise TraceError(
                    f"expert {e.name!r}: declared mean_perf {e.mean_perf} does not match "
                    f"recomputed column mean {m}"
                )
        costs.flags.writeable = False
        col_means.flags.writeable = False
        object.__setattr__(self, "costs", costs)
        object.__setattr__(self, "mean_perfs", col_means)

    @classmethod
    def from_arrays(
        cls,
        names: Sequence[str],
        costs: Sequence[float],
        conf,
        metric,
        sample_ids: Sequence[str] | None = None,
    ) -> TraceSet:
        """Build a trace, deriving each expert's mean_perf from its metric column."""
        metric_arr = np.asarray(metric, dtype=np.float64)
        if metric_arr.ndim != 2:
            raise TraceError(f"metric must be 2-D, got {metric_arr.ndim}-D")
        if len(names) != len(costs):
            raise TraceError("names and costs differ in length")
        means = metric_arr.mean(axis=0) if metric_arr.shape[1] == len(names) else None
        if means is None:
            raise TraceError(
                f"metric has {metric_arr.shape[1]} columns for {len(names)} experts"
            )
        experts = tuple(
            ExpertMeta(index=i, name=str(n), cost=float(c), mean_perf=float(m))
            for i, (n, c, m) in enumerate(zip(names, costs, means))
        )
        if sample_ids is None:
            sample_ids = tuple(f"s{i:06d}" for i in range(metric_arr.shape[0]))
        return cls(
            experts=experts,
            sample_ids=tuple(str(s) for s in sample_ids),
            conf=conf,
            metric=metric_arr,
        )

    @property
    def n_exp(self) -> int:
        return len(self.experts)

    @property
    def n_data(self) -> int:
        return len(self.sample_ids)

    def sample(self, i: int) -> SampleRecord:
        return SampleRecord(self.sample_ids[i], self.conf[i], self.metric[i])

    @property
    def samples(self) -> tuple[SampleRecord, ...]:
        return tuple(self.sample(i) for i in range(self.n_data))

    @property
    def trace_id(self) -> str:
        digest = hashlib.sha256(canonical_bytes(self)).hexdigest()
        return digest[:16]


def _dump(obj) -> str:
    return json.dumps(obj, separators=(",", ":"), ensure_ascii=False)


def canonical_bytes(trace: TraceSet) -> bytes:
    """Canonical serialized form; also the payload hashed into trace_id."""
    lines = [
        _dump(
            {
                "type": "header",
                "version": TRACE_VERSION,
                "experts": [{"name": e.name, "cost": e.cost} for e in trace.experts],
            }
        )
    ]
    for i, sid in enumerate(trace.sample_ids):
        lines.append(
            _dump(
                {
                    "id": sid,
                    "conf": trace.conf[i].tolist(),
                    "metric": trace.metric[i].tolist(),
                }
            )
        )
    return ("\n".join(lines) + "\n").encode("utf-8")


def write_trace(trace: TraceSet, path: str | Path) -> None:
    """Write the canonical JSONL form (one header line, one line per sample)."""
    Path(path).write_bytes(canonical_bytes(trace))


def _require(obj: dict, key: str, line: int):
    if key not in obj:
        raise TraceFormatError(f"missing key {key!r}", line)
    return obj[key]


def _num_list(values, key: str, sid: str, n_exp: int, line: int) -> list[float]:
    if not isinstance(values, list) or len(values) != n_exp:
        got = len(values) if isinstance(values, list) else type(values).__name__
        raise TraceFormatError(
            f"sample {sid!r}: {key} must be a list of {n_exp} numbers, got {got}", line
        )
    out = []
    for v in values:
        if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(v):
            raise TraceFormatError(f"sample {sid!r}: non-numeric {key} entry {v!r}", line)
        if not 0.0 <= v <= 1.0:
            raise TraceFormatError(
                f"sample {sid!r}: {key} value {v} outside [0, 1]", line
            )
        out.append(float(v))
    return out


def load_trace(path: str | Path) -> TraceSet:
    """Parse and validate a trace JSONL file.

    Unknown keys are ignored. A header-declared per-expert ``mean_perf`` is
    checked against the value recomputed from the metric columns.
    """
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        header = None
        declared_perf: list[float | None] = []
        ids: list[str] = []
        confs: list[list[float]] = []
        metrics: list[list[float]] = []
        n_exp = 0
        for lineno, raw in enumerate(fh, start=1):
            text = raw.strip()
            if not text:
                continue
            try:
                obj = json.loads(text)
            except json.JSONDecodeError as exc:
                raise TraceFormatError(f"invalid JSON ({exc.msg})", lineno) from exc
            if not isinstance(obj, dict):
                raise TraceFormatError("expected a JSON object", lineno)
            if header is None:
                if obj.get("type") != "header":
                    raise TraceFormatError('first line must have "type":"header"', lineno)
                version = _require(obj, "version", lineno)
                if version != TRACE_VERSION:
                    raise TraceFormatError(
                        f"unsupported trace version {version!r} (supported: {TRACE_VERSION})",
                        lineno,
                    )
                experts = _require(obj, "experts", lineno)
                if not isinstance(experts, list) or len(experts) < 2:
                    raise TraceFormatError("header must list at least 2 experts", lineno)
                header = []
                for k, e in enumerate(experts):
                    if not isinstance(e, dict):
                        raise TraceFormatError(f"expert {k} is not an object", lineno)
                    name = _require(e, "name", lineno)
                    cost = _require(e, "cost", lineno)
                    if not isinstance(cost, (int, float)) or isinstance(cost, bool) or cost <= 0:
                        raise TraceFormatError(
                            f"expert {name!r}: cost must be a positive number, got {cost!r}",
                            lineno,
                        )
                    header.append((str(name), float(cost)))
                    declared_perf.append(
                        float(e["mean_perf"]) if "mean_perf" in e else None
                    )
                n_exp = len(header)
                for k in range(1, n_exp):
                    if header[k][1] <= header[k - 1][1]:
                        raise TraceFormatError(
                            f"expert costs not strictly ascending: "
                            f"{header[k - 1][0]}={header[k - 1][1]} then "
                            f"{header[k][0]}={header[k][1]}",
                            lineno,
                        )
                continue
            sid = str(_require(obj, "id", lineno))
            confs.append(_num_list(_require(obj, "conf", lineno), "conf", sid, n_exp, lineno))
            metrics.append(
                _num_list(_require(obj, "metric", lineno), "metric", sid, n_exp, lineno)
            )
            ids.append(sid)
    if header is None:
        raise TraceFormatError("empty file: missing header line")
    if not ids:
        raise TraceFormatError("trace has a header but no sample lines")
    trace = TraceSet.from_arrays(
        names=[h[0] for h in header],
        costs=[h[1] for h in header],
        conf=confs,
        metric=metrics,
        sample_ids=ids,
    )
    for e, declared in zip(trace.experts, declared_perf):
        if declared is not None and abs(declared - e.mean_perf) > MEAN_PERF_TOL:
            raise TraceError(
                f"expert {e.name!r}: header mean_perf {declared} does not match "
                f"recomputed {e.mean_perf}"
            )
    return trace


def synth_target_accuracies(n_experts: int) -> np.ndarray:
    """Per-expert accuracy targets used by synth_trace, ascending with index."""
    return np.linspace(SYNTH_ACC_LO, SYNTH_ACC_HI, n_experts)


def _correct_counts(targets: np.ndarray, n_samples: int) -> np.ndarray:
    # Strictly ascending integer counts so mean_perf is strictly increasing
    # for every seed and size.
    k = np.rint(targets * n_samples).astype(np.int64)
    for i in range(1, len(k)):
        k[i] = max(k[i], k[i - 1] + 1)
    if k[-1] > n_samples:
        k[-1] = n_samples
        for i in range(len(k) - 2, -1, -1):
            k[i] = min(k[i], k[i + 1] - 1)
    if k[0] < 0:
        raise TraceError(
            f"n_samples={n_samples} too small for {len(k)} strictly ordered experts"
        )
    return k


def synth_trace(
    n_experts: int,
    n_samples: int,
    seed: int,
    difficulty_skew: float = 0.5,
) -> TraceSet:
    """Generate a deterministic synthetic trace for testing and benchmarks.

    Samples get a latent difficulty d in [0, 1]; smaller ``difficulty_skew``
    concentrates mass at easy samples (1.0 keeps difficulty uniform). Expert i
    is correct on the samples whose noisy difficulty ranks below its target
    accuracy quantile, so accuracy rises with the expert index and falls with
    difficulty. Confidence is drawn high for correct-and-easy samples and low
    for incorrect-or-hard ones, which is what makes threshold gating effective
    on these pools.
    """
    if n_experts < 2:
        raise TraceError(f"n_experts must be >= 2, got {n_experts}")
    if n_samples < 1:
        raise TraceError(f"n_samples must be >= 1, got {n_samples}")
    if n_samples < n_experts - 1:
        raise TraceError(
            f"n_samples={n_samples} cannot produce strictly increasing mean_perf "
            f"over {n_experts} experts"
        )
    if not 0.0 < difficulty_skew <= 1.0:
        raise TraceError(f"difficulty_skew must be in (0, 1], got {difficulty_skew}")

    rng = np.random.default_rng(seed)
    d = rng.random(n_samples) ** (1.0 / difficulty_skew)
    k = _correct_counts(synth_target_accuracies(n_experts), n_samples)

    conf = np.empty((n_samples, n_experts))
    metric = np.zeros((n_samples, n_experts))
    for i in range(n_experts):
        score = d + rng.normal(0.0, 0.25, n_samples)
        order = np.argsort(score, kind="stable")
        metric[order[: k[i]], i] = 1.0
        eps = rng.normal(0.0, 1.0, n_samples)
        tilt = 0.15 * i / (n_experts - 1)
        z = 2.2 * (2.0 * metric[:, i] - 1.0) + 3.6 * (0.5 - d) + tilt + 0.6 * eps
        conf[:, i] = 1.0 / (1.0 + np.exp(-z))

    names = [f"synth-{i:02d}" for i in range(n_experts)]
    costs = [SYNTH_COST_BASE**i for i in range(n_experts)]
    return TraceSet.from_arrays(names, costs, conf, metric)


@dataclass(frozen=True)
class ExpertStats:
    """Summary of one expert over a trace."""

    index: int
    name: str
    cost: float
    mean_perf: float
    conf_hist: tuple[int, ...]
    bin_edges: tuple[float, ...]


def expert_stats(trace: TraceSet, bins: int = 10) -> list[ExpertStats]:
    """Per-expert mean metric, cost, and a confidence histogram over [0, 1]."""
    out = []
    for e in trace.experts:
        counts, edges = np.histogram(trace.conf[:, e.index], bins=bins, range=(0.0, 1.0))
        out.append(
            ExpertStats(
                index=e.index,
                name=e.name,
                cost=e.cost,
                mean_perf=e.mean_perf,
                conf_hist=tuple(int(c) for c in counts),
                bin_edges=tuple(float(x) for x in edges),
            )
        )
    return out
