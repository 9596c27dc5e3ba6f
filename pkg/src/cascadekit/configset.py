"""Deployable collections of searched configs: filtering, interpolation, I/O.

A collection pairs each config with the evaluation report it earned on the
calibration trace. Post-processing first drops cost/performance-dominated
entries, then densifies the preference axis by linear interpolation of both
threshold vectors, then enforces strict joint monotonicity of mean exit
confidence and mean cost so the runtime can treat the collection as a ladder.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

from .routing import Config, EvalReport, config_from_dict, config_to_dict, evaluate
from .search import SearchParams, params_from_dict, params_to_dict
from .trace import ExpertMeta, TraceSet

COLLECTION_VERSION = 1

# Guard against float drift when deciding whether an interpolation point has
# reached the right endpoint of its gap.
_LAMBDA_EPS = 1e-12


class CollectionError(ValueError):
    """Invalid collection content or schema."""


@dataclass(frozen=True)
class CollectionEntry:
    config: Config
    report: EvalReport


@dataclass(frozen=True)
class ConfigCollection:
    """Ascending-lambda sequence of (config, calibration report) pairs.

    ``experts`` carries the pool metadata (names, costs, overall mean metric)
    so a saved collection is self-contained for streaming deployment.
    """

    trace_id: str
    params: SearchParams
    experts: tuple[ExpertMeta, ...] | None
    entries: tuple[CollectionEntry, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "entries", tuple(self.entries))
        lams = [e.config.lam for e in self.entries]
        for a, b in zip(lams, lams[1:]):
            if b <= a:
                raise CollectionError(
                    f"entry lambdas not strictly ascending at {a} -> {b}"
                )
        widths = {e.config.n_exp for e in self.entries}
        if len(widths) > 1:
            raise CollectionError(f"entries disagree on expert count: {sorted(widths)}")
        for e in self.entries:
            n = e.config.n_exp
            if len(e.report.n_exit) != n or len(e.report.n_comp) != n:
                raise CollectionError(
                    f"entry lambda={e.config.lam}: report counts do not cover {n} experts"
                )
        if self.experts is not None:
            object.__setattr__(self, "experts", tuple(self.experts))
            if widths and len(self.experts) != widths.pop():
                raise CollectionError("expert list does not match entry width")

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def lambdas(self) -> tuple[float, ...]:
        return tuple(e.config.lam for e in self.entries)


def pareto_filter(collection: ConfigCollection) -> ConfigCollection:
    """Drop every entry that another entry beats on both axes strictly."""
    entries = collection.entries

    def dominated(e: CollectionEntry) -> bool:
        return any(
            o.report.mean_cost_raw < e.report.mean_cost_raw
            and o.report.perf > e.report.perf
            for o in entries
        )

    return replace(collection, entries=tuple(e for e in entries if not dominated(e)))


def interpolate(
    collection: ConfigCollection, trace: TraceSet, step: float
) -> ConfigCollection:
    """Insert linearly interpolated configs strictly between adjacent entries.

    Both threshold vectors interpolate element-wise; each new entry is
    evaluated on the calibration trace. Existing entries pass through
    untouched.
    """
    if len(collection.entries) < 2:
        raise CollectionError(
            f"interpolation needs at least 2 entries, got {len(collection.entries)}"
        )
    if trace.trace_id != collection.trace_id:
        raise CollectionError(
            f"trace {trace.trace_id} is not the collection's calibration trace "
            f"{collection.trace_id}"
        )
    gaps = [b - a for a, b in zip(collection.lambdas, collection.lambdas[1:])]
    if not 0.0 < step < min(gaps):
        raise CollectionError(
            f"step {step} must be positive and below the smallest lambda gap {min(gaps)}"
        )

    out: list[CollectionEntry] = []
    for left, right in zip(collection.entries, collection.entries[1:]):
        out.append(left)
        la, lb = left.config.lam, right.config.lam
        k = 1
        while True:
            lp = la + k * step
            if lp >= lb - _LAMBDA_EPS:
                break
            frac = (lp - la) / (lb - la)
            t1 = tuple(
                a + frac * (b - a) for a, b in zip(left.config.t1, right.config.t1)
            )
            t2 = tuple(
                a + frac * (b - a) for a, b in zip(left.config.t2, right.config.t2)
            )
            config = Config(lp, t1, t2)
            out.append(CollectionEntry(config=config, report=evaluate(trace, config)))
            k += 1
    out.append(collection.entries[-1])
    return replace(collection, entries=tuple(out))


def monotonic_filter(collection: ConfigCollection) -> ConfigCollection:
    """Keep entries whose mean exit confidence AND mean cost strictly rise."""
    kept: list[CollectionEntry] = []
    for e in collection.entries:
        if not kept:
            kept.append(e)
            continue
        last = kept[-1].report
        if (
            e.report.mean_exit_conf > last.mean_exit_conf
            and e.report.mean_cost_raw > last.mean_cost_raw
        ):
            kept.append(e)
    return replace(collection, entries=tuple(kept))


def _report_to_dict(report: EvalReport) -> dict:
    return {
        "mean_cost_raw": report.mean_cost_raw,
        "mean_cost_norm": report.mean_cost_norm,
        "perf": report.perf,
        "mean_exit_conf": report.mean_exit_conf,
        "n_exit": list(report.n_exit),
        "n_comp": list(report.n_comp),
    }


def _report_from_dict(obj: dict) -> EvalReport:
    try:
        return EvalReport(
            mean_cost_raw=float(obj["mean_cost_raw"]),
            mean_cost_norm=float(obj["mean_cost_norm"]),
            perf=float(obj["perf"]),
            mean_exit_conf=float(obj["mean_exit_conf"]),
            n_exit=tuple(int(v) for v in obj["n_exit"]),
            n_comp=tuple(int(v) for v in obj["n_comp"]),
        )
    except KeyError as exc:
        raise CollectionError(f"report object missing key {exc.args[0]!r}") from exc


def collection_to_dict(collection: ConfigCollection) -> dict:
    doc: dict = {
        "version": COLLECTION_VERSION,
        "trace_id": collection.trace_id,
        "params": params_to_dict(collection.params),
    }
    if collection.experts is not None:
        doc["experts"] = [
            {"name": e.name, "cost": e.cost, "mean_perf": e.mean_perf}
            for e in collection.experts
        ]
    doc["entries"] = [
        {**config_to_dict(e.config), "report": _report_to_dict(e.report)}
        for e in collection.entries
    ]
    return doc


def collection_from_dict(doc: dict) -> ConfigCollection:
    if not isinstance(doc, dict):
        raise CollectionError("collection document must be a JSON object")
    version = doc.get("version")
    if version != COLLECTION_VERSION:
        raise CollectionError(
            f"unsupported collection version {version!r} (supported: {COLLECTION_VERSION})"
        )
    for key in ("trace_id", "params", "entries"):
        if key not in doc:
            raise CollectionError(f"collection document missing key {key!r}")
    experts = None
    if "experts" in doc:
        experts = []
        for i, e in enumerate(doc["experts"]):
            try:
                experts.append(
                    ExpertMeta(
                        index=i,
                        name=str(e["name"]),
                        cost=float(e["cost"]),
                        mean_perf=float(e["mean_perf"]),
                    )
                )
            except KeyError as exc:
                raise CollectionError(
                    f"expert {i} missing key {exc.args[0]!r}"
                ) from exc
        experts = tuple(experts)
    entries = []
    for i, obj in enumerate(doc["entries"]):
        if "report" not in obj:
            raise CollectionError(f"entry {i} missing key 'report'")
        entries.append(
            CollectionEntry(
                config=config_from_dict(obj),
                report=_report_from_dict(obj["report"]),
            )
        )
    return ConfigCollection(
        trace_id=str(doc["trace_id"]),
        params=params_from_dict(doc["params"]),
        experts=experts,
        entries=tuple(entries),
    )


def save_collection(collection: ConfigCollection, path: str | Path) -> None:
    payload = json.dumps(
        collection_to_dict(collection), separators=(",", ":"), ensure_ascii=False
    )
    Path(path).write_bytes((payload + "\n").encode("utf-8"))


def load_collection(path: str | Path) -> ConfigCollection:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise CollectionError(f"{path}: invalid JSON ({exc.msg})") from exc
    return collection_from_dict(doc)
