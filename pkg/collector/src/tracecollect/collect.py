"""The collect run: batched inference per model, cost resolution, expert
sort, and trace emission."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import torch

from .config import CollectError, CollectorConfig
from .dataset import load_batch, make_transform, scan_images
from .models import load_model, model_name
from .profile import profile_cost

TRACE_VERSION = 1


def collect(config: CollectorConfig) -> Path:
    """Run every model over the folder and write the trace file.

    Returns the output path. Experts are sorted ascending by cost before
    writing; sample confidence/metric columns are permuted to match.
    """
    pairs = scan_images(config.data, config.labels)
    rel_paths = [rel for rel, _ in pairs]
    labels = np.array([lab for _, lab in pairs])
    transform = make_transform(config.image_size)

    names = [model_name(m) for m in config.models]
    if len(set(names)) != len(names):
        raise CollectError(f"duplicate expert names after resolution: {names}")

    conf_cols = []
    metric_cols = []
    costs = []
    example = load_batch(config.data, rel_paths[:1], transform).to(config.device)
    for position, identifier in enumerate(config.models):
        model = load_model(identifier, config.device)
        if config.cost.kind == "manual":
            cost = profile_cost(model, "manual", value=config.cost.values[position])
        else:
            cost = profile_cost(model, config.cost.kind, example=example)
        costs.append(cost)

        conf, metric = _infer_columns(model, config, rel_paths, labels, transform)
        conf_cols.append(conf)
        metric_cols.append(metric)
        del model

    order = sorted(range(len(names)), key=lambda i: costs[i])
    for a, b in zip(order, order[1:]):
        if costs[a] == costs[b]:
            raise CollectError(
                f"experts {names[a]!r} and {names[b]!r} have equal cost "
                f"{costs[a]}; the trace needs strictly ascending costs"
            )

    _write_trace(
        config.out,
        [names[i] for i in order],
        [costs[i] for i in order],
        rel_paths,
        np.stack([conf_cols[i] for i in order], axis=1),
        np.stack([metric_cols[i] for i in order], axis=1),
    )
    return config.out


def _infer_columns(model, config, rel_paths, labels, transform):
    """One model's max-softmax confidence and top-1 correctness per image."""
    confs = np.empty(len(rel_paths))
    metrics = np.empty(len(rel_paths))
    with torch.no_grad():
        for start in range(0, len(rel_paths), config.batch_size):
            chunk = rel_paths[start : start + config.batch_size]
            batch = load_batch(config.data, chunk, transform).to(config.device)
            logits = model(batch)
            if logits.ndim != 2:
                raise CollectError(
                    f"model output has shape {tuple(logits.shape)}, "
                    "expected (batch, classes)"
                )
            n_classes = logits.shape[1]
            high = int(labels[start : start + len(chunk)].max())
            if high >= n_classes:
                raise CollectError(
                    f"label {high} out of range for a {n_classes}-class model"
                )
            probs = torch.softmax(logits.double(), dim=1)
            top = probs.argmax(dim=1).cpu().numpy()
            confs[start : start + len(chunk)] = probs.max(dim=1).values.cpu().numpy()
            metrics[start : start + len(chunk)] = (
                top == labels[start : start + len(chunk)]
            ).astype(float)
    return confs, metrics


def _write_trace(out, names, costs, rel_paths, conf, metric):
    """Emit the header plus one line per image, deterministically encoded."""
    out = Path(out)
    header = {
        "type": "header",
        "version": TRACE_VERSION,
        "experts": [
            {"name": n, "cost": float(c)} for n, c in zip(names, costs)
        ],
    }
    with open(out, "w") as fh:
        fh.write(json.dumps(header, separators=(",", ":")) + "\n")
        for row, rel in enumerate(rel_paths):
            record = {
                "id": rel,
                "conf": [float(v) for v in conf[row]],
                "metric": [float(v) for v in metric[row]],
            }
            fh.write(json.dumps(record, separators=(",", ":")) + "\n")
    return out
