"""Command-line pipeline: synth, validate, search, postprocess, eval, route,
train-gate. Exit codes: 0 success, 1 validation/data failure, 2 usage error."""

from __future__ import annotations

import argparse
import json
import os
import sys
from collections import deque

import numpy as np

from . import configset, gate, runtime, search, trace
from .routing import ConfigError, evaluate
from .trace import SampleRecord

THREADS_ENV = "ORXE_THREADS"


def _parse_lambda_grid(text: str) -> tuple[float, ...]:
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(
            f"expected START:STOP:STEP, got {text!r}"
        )
    try:
        start, stop, step = (float(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(f"non-numeric lambda range {text!r}")
    if step <= 0.0 or stop < start:
        raise argparse.ArgumentTypeError(f"empty or descending lambda range {text!r}")
    count = int((stop - start) / step + 1e-9)
    return tuple(start + k * step for k in range(count + 1))


def _parse_hidden(text: str) -> tuple[int, ...]:
    try:
        sizes = tuple(int(p) for p in text.split(",") if p)
    except ValueError:
        raise argparse.ArgumentTypeError(f"hidden sizes must be integers, got {text!r}")
    if not sizes or any(s < 1 for s in sizes):
        raise argparse.ArgumentTypeError(f"hidden sizes must be positive, got {text!r}")
    return sizes


def _resolve_threads(value: int | None) -> int:
    if value is not None:
        return value
    env = os.environ.get(THREADS_ENV)
    if env is None:
        return 1
    try:
        return int(env)
    except ValueError:
        raise ValueError(f"{THREADS_ENV} must be an integer, got {env!r}")


def _info(message: str) -> None:
    print(message, file=sys.stderr)


def cmd_synth(args: argparse.Namespace) -> int:
    ts = trace.synth_trace(args.experts, args.samples, args.seed, args.skew)
    trace.write_trace(ts, args.out)
    _info(f"wrote {args.out}: {ts.n_exp} experts, {ts.n_data} samples")
    return 0


def cmd_validate(args: argparse.Namespace) -> int:
    ts = trace.load_trace(args.trace)
    _info(f"{args.trace}: valid trace, {ts.n_exp} experts, {ts.n_data} samples")
    for e in ts.experts:
        _info(f"  expert {e.index} {e.name}: cost={e.cost!r} mean_perf={e.mean_perf!r}")
    return 0


def cmd_search(args: argparse.Namespace) -> int:
    ts = trace.load_trace(args.trace)
    params = search.SearchParams(
        lambda_grid=args.lambdas,
        delta=args.delta,
        alpha=args.alpha,
        beta=args.beta,
    )
    threads = _resolve_threads(args.threads)
    collection = search.search_collection(ts, params, threads=threads)
    configset.save_collection(collection, args.out)
    _info(f"wrote {args.out}: {len(collection)} configs")
    return 0


def cmd_postprocess(args: argparse.Namespace) -> int:
    collection = configset.load_collection(args.inp)
    ts = trace.load_trace(args.trace)
    collection = configset.pareto_filter(collection)
    if len(collection) >= 2:
        collection = configset.interpolate(collection, ts, args.interp_step)
    else:
        _info("fewer than 2 entries after the Pareto pass; skipping interpolation")
    collection = configset.monotonic_filter(collection)
    configset.save_collection(collection, args.out)
    _info(f"wrote {args.out}: {len(collection)} configs")
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    ts = trace.load_trace(args.trace)
    collection = configset.load_collection(args.configs)
    if not collection.entries:
        raise configset.CollectionError(f"{args.configs}: collection has no entries")
    entries = collection.entries
    if args.lam is not None:
        idx = runtime.snap_index(collection, args.lam)
        snapped = entries[idx].config.lam
        if snapped != args.lam:
            _info(f"lambda {args.lam!r} not in collection; using nearest {snapped!r}")
        entries = (entries[idx],)
    header = ["lambda", "mean_cost_raw", "mean_cost_norm", "perf", "mean_exit_conf"]
    header += [f"n_exit_{i}" for i in range(ts.n_exp)]
    lines = [",".join(header)]
    for entry in entries:
        report = evaluate(ts, entry.config)
        cells = [
            repr(entry.config.lam),
            repr(report.mean_cost_raw),
            repr(report.mean_cost_norm),
            repr(report.perf),
            repr(report.mean_exit_conf),
        ]
        cells += [str(c) for c in report.n_exit]
        lines.append(",".join(cells))
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    _info(f"wrote {args.out}: {len(entries)} rows")
    return 0


def _stdin_records(n_exp: int):
    for lineno, raw in enumerate(sys.stdin, start=1):
        text = raw.strip()
        if not text:
            continue
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValueError(f"stdin line {lineno}: invalid JSON ({exc.msg})") from exc
        if not isinstance(obj, dict):
            raise ValueError(f"stdin line {lineno}: expected a JSON object")
        if obj.get("type") == "header":
            declared = obj.get("experts")
            if isinstance(declared, list) and len(declared) != n_exp:
                raise ValueError(
                    f"stdin line {lineno}: header lists {len(declared)} experts, "
                    f"collection has {n_exp}"
                )
            continue
        if "id" not in obj or "conf" not in obj:
            raise ValueError(f"stdin line {lineno}: sample needs 'id' and 'conf'")
        conf = np.asarray(obj["conf"], dtype=np.float64)
        if conf.shape != (n_exp,):
            raise ValueError(
                f"stdin line {lineno}: sample {obj['id']!r} has {conf.size} "
                f"confidences, collection has {n_exp} experts"
            )
        if not np.isfinite(conf).all() or (conf < 0).any() or (conf > 1).any():
            raise ValueError(
                f"stdin line {lineno}: sample {obj['id']!r} conf outside [0, 1]"
            )
        metric = np.zeros(n_exp)
        if "metric" in obj:
            metric = np.asarray(obj["metric"], dtype=np.float64)
            if metric.shape != (n_exp,):
                raise ValueError(
                    f"stdin line {lineno}: sample {obj['id']!r} metric length mismatch"
                )
        yield SampleRecord(str(obj["id"]), conf, metric)


def cmd_route(args: argparse.Namespace) -> int:
    collection = configset.load_collection(args.configs)
    if collection.experts is None:
        raise configset.CollectionError(
            f"{args.configs}: collection carries no expert costs; cannot route"
        )
    n_exp = len(collection.experts)
    controller = None
    initial = args.lam
    if args.budget is not None:
        controller = runtime.BudgetController(
            target_cost=args.budget,
            n_entries=len(collection.entries),
            window=args.window,
            hysteresis=args.hysteresis,
            current_index=runtime.nearest_cost_index(collection, args.budget),
        )
    pending_ids: deque[str] = deque()

    def tapped():
        for record in _stdin_records(n_exp):
            pending_ids.append(record.sample_id)
            yield record

    stream = runtime.route_stream(
        tapped(), collection, initial_lam=initial, controller=controller
    )
    out = sys.stdout
    for outcome, lam in stream:
        line = {
            "id": pending_ids.popleft(),
            "exit": outcome.exit_node,
            "cost": outcome.cost,
            "lambda": lam,
        }
        out.write(json.dumps(line, separators=(",", ":")) + "\n")
    out.flush()
    return 0


def cmd_train_gate(args: argparse.Namespace) -> int:
    _, x, m = gate.load_features(args.features)
    cfg = gate.TrainCfg(
        batch_size=args.batch,
        lr=args.lr,
        epochs=args.epochs,
        seed=args.seed,
        hidden=args.hidden,
    )
    model = gate.train(x, m, cfg)
    gate.save_model(model, args.out)
    _info(f"wrote {args.out}: layers {list(model.layer_sizes)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cascadekit",
        description="Trace-driven search and routing for confidence-gated expert cascades.",
    )
    sub = parser.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("synth", help="generate a synthetic trace")
    p.add_argument("--experts", type=int, required=True)
    p.add_argument("--samples", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--skew", type=float, default=0.5)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("validate", help="check a trace file")
    p.add_argument("--trace", required=True)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("search", help="search configs across a lambda grid")
    p.add_argument("--trace", required=True)
    p.add_argument("--lambdas", type=_parse_lambda_grid, required=True,
                   metavar="START:STOP:STEP")
    p.add_argument("--delta", type=float, default=search.DEFAULT_DELTA)
    p.add_argument("--alpha", type=float, default=search.DEFAULT_ALPHA)
    p.add_argument("--beta", type=float, default=search.DEFAULT_BETA)
    p.add_argument("--out", required=True)
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("postprocess", help="pareto-filter, interpolate, monotonic-filter")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--trace", required=True)
    p.add_argument("--interp-step", type=float, default=0.001)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_postprocess)

    p = sub.add_parser("eval", help="evaluate collection configs on a trace (CSV)")
    p.add_argument("--trace", required=True)
    p.add_argument("--configs", required=True)
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("route", help="stream samples from stdin through the cascade")
    p.add_argument("--configs", required=True)
    mode = p.add_mutually_exclusive_group(required=True)
    mode.add_argument("--lambda", dest="lam", type=float, default=None)
    mode.add_argument("--budget", type=float, default=None)
    p.add_argument("--window", type=int, default=runtime.DEFAULT_WINDOW)
    p.add_argument("--hysteresis", type=float, default=runtime.DEFAULT_HYSTERESIS)
    p.set_defaults(func=cmd_route)

    p = sub.add_parser("train-gate", help="train a pairwise-ranking confidence gate")
    p.add_argument("--features", required=True)
    p.add_argument("--hidden", type=_parse_hidden, default=gate.DEFAULT_HIDDEN)
    p.add_argument("--batch", type=int, default=gate.DEFAULT_BATCH)
    p.add_argument("--lr", type=float, default=gate.DEFAULT_LR)
    p.add_argument("--epochs", type=int, default=gate.DEFAULT_EPOCHS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train_gate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
