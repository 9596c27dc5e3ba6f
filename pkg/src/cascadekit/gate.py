"""Pairwise-ranking confidence gate: a small dense network trained so that
samples with higher metric values receive higher scores, squashed through a
sigmoid into the [0, 1] confidence the routing gates expect.

Training compares every in-batch pair: a pair's target is 1, 0.5, or 0 by
which member has the larger metric, and the loss is binary cross entropy on
the sigmoid of the score difference, averaged over all B(B-1)/2 pairs.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

MODEL_VERSION = 1

DEFAULT_HIDDEN = (16,)
DEFAULT_BATCH = 32
DEFAULT_LR = 0.2
DEFAULT_EPOCHS = 100
DEFAULT_INIT_SCALE = 0.1


class GateError(ValueError):
    """Invalid gate model, batch, or dataset."""


@dataclass(frozen=True)
class GateModel:
    """Dense scorer: rectified hidden layers, single identity output."""

    layer_sizes: tuple[int, ...]
    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        sizes = tuple(int(s) for s in self.layer_sizes)
        object.__setattr__(self, "layer_sizes", sizes)
        if len(sizes) < 2:
            raise GateError("layer_sizes needs at least input and output")
        if sizes[-1] != 1:
            raise GateError(f"output dimension must be 1, got {sizes[-1]}")
        if any(s < 1 for s in sizes):
            raise GateError(f"layer sizes must be positive: {sizes}")
        if len(self.weights) != len(sizes) - 1 or len(self.biases) != len(sizes) - 1:
            raise GateError("one weight matrix and bias vector per layer expected")
        ws, bs = [], []
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            w = np.asarray(w, dtype=np.float64)
            b = np.asarray(b, dtype=np.float64)
            if w.shape != (sizes[k + 1], sizes[k]):
                raise GateError(
                    f"layer {k}: weight shape {w.shape} != {(sizes[k + 1], sizes[k])}"
                )
            if b.shape != (sizes[k + 1],):
                raise GateError(f"layer {k}: bias shape {b.shape} != {(sizes[k + 1],)}")
            if not (np.isfinite(w).all() and np.isfinite(b).all()):
                raise GateError(f"layer {k}: non-finite parameters")
            ws.append(w)
            bs.append(b)
        object.__setattr__(self, "weights", tuple(ws))
        object.__setattr__(self, "biases", tuple(bs))

    @property
    def input_dim(self) -> int:
        return self.layer_sizes[0]


@dataclass(frozen=True)
class RankingBatch:
    features: np.ndarray
    metric: np.ndarray

    def __post_init__(self) -> None:
        x = np.asarray(self.features, dtype=np.float64)
        m = np.asarray(self.metric, dtype=np.float64)
        if x.ndim != 2:
            raise GateError(f"features must be 2-D, got {x.ndim}-D")
        if m.shape != (x.shape[0],):
            raise GateError(f"metric shape {m.shape} != ({x.shape[0]},)")
        if x.shape[0] < 2:
            raise GateError(f"a ranking batch needs >= 2 rows, got {x.shape[0]}")
        if not (np.isfinite(x).all() and np.isfinite(m).all()):
            raise GateError("batch contains non-finite values")
        object.__setattr__(self, "features", x)
        object.__setattr__(self, "metric", m)


@dataclass(frozen=True)
class TrainCfg:
    """Training knobs. Architecture and optimizer defaults are plain choices:
    one rectified hidden layer and constant-step mini-batch gradient descent."""

    batch_size: int = DEFAULT_BATCH
    lr: float = DEFAULT_LR
    epochs: int = DEFAULT_EPOCHS
    seed: int = 0
    init_scale: float = DEFAULT_INIT_SCALE
    hidden: tuple[int, ...] = DEFAULT_HIDDEN

    def __post_init__(self) -> None:
        if self.batch_size < 2:
            raise GateError(f"batch_size must be >= 2, got {self.batch_size}")
        if self.lr <= 0.0:
            raise GateError(f"lr must be positive, got {self.lr}")
        if self.epochs < 1:
            raise GateError(f"epochs must be >= 1, got {self.epochs}")
        if self.init_scale < 0.0:
            raise GateError(f"init_scale must be >= 0, got {self.init_scale}")


def init_model(
    layer_sizes: Sequence[int], rng: np.random.Generator, scale: float = DEFAULT_INIT_SCALE
) -> GateModel:
    sizes = tuple(int(s) for s in layer_sizes)
    weights = tuple(
        rng.normal(0.0, scale, size=(sizes[k + 1], sizes[k]))
        for k in range(len(sizes) - 1)
    )
    biases = tuple(np.zeros(sizes[k + 1]) for k in range(len(sizes) - 1))
    return GateModel(layer_sizes=sizes, weights=weights, biases=biases)


def _forward(
    model: GateModel, x: np.ndarray
) -> tuple[np.ndarray, list[np.ndarray], list[np.ndarray]]:
    """Returns (logits, layer inputs, pre-activations) for backprop."""
    inputs = [x]
    preacts = []
    h = x
    last = len(model.weights) - 1
    for k, (w, b) in enumerate(zip(model.weights, model.biases)):
        a = h @ w.T + b
        preacts.append(a)
        h = a if k == last else np.maximum(a, 0.0)
        if k != last:
            inputs.append(h)
    return h[:, 0], inputs, preacts


def logits(model: GateModel, features) -> np.ndarray:
    x = np.asarray(features, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.shape[1] != model.input_dim:
        raise GateError(f"feature dim {x.shape[1]} != model input {model.input_dim}")
    return _forward(model, x)[0]


def confidence(model: GateModel, features) -> np.ndarray | float:
    """Sigmoid of the score; scalar for a single feature vector."""
    single = np.asarray(features).ndim == 1
    g = logits(model, features)
    conf = 1.0 / (1.0 + np.exp(-g))
    return float(conf[0]) if single else conf


def pairwise_target(m_i: float, m_j: float) -> float:
    if not (math.isfinite(m_i) and math.isfinite(m_j)):
        raise GateError(f"non-finite metric pair ({m_i}, {m_j})")
    if m_i > m_j:
        return 1.0
    if m_i < m_j:
        return 0.0
    return 0.5


def _pair_arrays(batch: RankingBatch) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Upper-triangle pair indices (i < j) and their targets."""
    m = batch.metric
    ii, jj = np.triu_indices(len(m), k=1)
    targets = np.where(m[ii] > m[jj], 1.0, np.where(m[ii] < m[jj], 0.0, 0.5))
    return ii, jj, targets


def pairwise_loss(model: GateModel, batch: RankingBatch) -> float:
    """Mean BCE over all ordered-by-index pairs, in overflow-safe form."""
    g = logits(model, batch.features)
    ii, jj, targets = _pair_arrays(batch)
    z = g[ii] - g[jj]
    return float(np.mean(np.logaddexp(0.0, z) - targets * z))


def loss_gradient(
    model: GateModel, batch: RankingBatch
) -> tuple[tuple[np.ndarray, ...], tuple[np.ndarray, ...]]:
    """Analytic gradient of pairwise_loss: (weight grads, bias grads)."""
    x = batch.features
    if x.shape[1] != model.input_dim:
        raise GateError(f"feature dim {x.shape[1]} != model input {model.input_dim}")
    g, inputs, preacts = _forward(model, x)
    ii, jj, targets = _pair_arrays(batch)
    z = g[ii] - g[jj]
    pair_w = (1.0 / (1.0 + np.exp(-z)) - targets) / len(z)
    dg = np.zeros(len(g))
    np.add.at(dg, ii, pair_w)
    np.add.at(dg, jj, -pair_w)

    delta = dg[:, None]
    grads_w: list[np.ndarray] = []
    grads_b: list[np.ndarray] = []
    for k in range(len(model.weights) - 1, -1, -1):
        grads_w.append(delta.T @ inputs[k])
        grads_b.append(delta.sum(axis=0))
        if k > 0:
            delta = (delta @ model.weights[k]) * (preacts[k - 1] > 0.0)
    return tuple(reversed(grads_w)), tuple(reversed(grads_b))


def train(features, metrics, cfg: TrainCfg = TrainCfg()) -> GateModel:
    """Mini-batch gradient descent on the pairwise loss. Deterministic by seed."""
    x = np.asarray(features, dtype=np.float64)
    m = np.asarray(metrics, dtype=np.float64)
    if x.ndim != 2:
        raise GateError(f"features must be 2-D, got {x.ndim}-D")
    if m.shape != (x.shape[0],):
        raise GateError(f"metrics shape {m.shape} != ({x.shape[0]},)")
    if not (np.isfinite(x).all() and np.isfinite(m).all()):
        raise GateError("dataset contains non-finite values")
    if x.shape[0] < cfg.batch_size:
        raise GateError(
            f"dataset has {x.shape[0]} rows, fewer than batch_size {cfg.batch_size}"
        )
    rng = np.random.default_rng(cfg.seed)
    sizes = (x.shape[1], *cfg.hidden, 1)
    model = init_model(sizes, rng, cfg.init_scale)
    if np.all(m == m[0]):
        warnings.warn("all metric values are identical; returning the initial model")
        return model

    weights = [w.copy() for w in model.weights]
    biases = [b.copy() for b in model.biases]
    n = x.shape[0]
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            if len(idx) < 2:
                continue
            current = GateModel(sizes, tuple(weights), tuple(biases))
            gw, gb = loss_gradient(current, RankingBatch(x[idx], m[idx]))
            for k in range(len(weights)):
                weights[k] -= cfg.lr * gw[k]
                biases[k] -= cfg.lr * gb[k]
    return GateModel(sizes, tuple(weights), tuple(biases))


def ranking_accuracy(model: GateModel, features, metrics) -> float:
    """Share of strictly ordered pairs the model scores in the right order;
    score ties earn half credit."""
    g = logits(model, features)
    m = np.asarray(metrics, dtype=np.float64)
    ii, jj = np.triu_indices(len(m), k=1)
    ordered = m[ii] != m[jj]
    if not ordered.any():
        raise GateError("no strictly ordered pairs to score")
    sign_m = np.sign(m[ii] - m[jj])[ordered]
    sign_g = np.sign(g[ii] - g[jj])[ordered]
    return float(np.mean(np.where(sign_g == 0, 0.5, (sign_g == sign_m).astype(float))))


def save_model(model: GateModel, path: str | Path) -> None:
    doc = {
        "version": MODEL_VERSION,
        "layer_sizes": list(model.layer_sizes),
        "weights": [w.tolist() for w in model.weights],
        "biases": [b.tolist() for b in model.biases],
    }
    payload = json.dumps(doc, separators=(",", ":"), ensure_ascii=False)
    Path(path).write_bytes((payload + "\n").encode("utf-8"))


def load_model(path: str | Path) -> GateModel:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise GateError(f"{path}: invalid JSON ({exc.msg})") from exc
    if not isinstance(doc, dict):
        raise GateError("model document must be a JSON object")
    version = doc.get("version")
    if version != MODEL_VERSION:
        raise GateError(
            f"unsupported model version {version!r} (supported: {MODEL_VERSION})"
        )
    try:
        return GateModel(
            layer_sizes=tuple(doc["layer_sizes"]),
            weights=tuple(np.asarray(w, dtype=np.float64) for w in doc["weights"]),
            biases=tuple(np.asarray(b, dtype=np.float64) for b in doc["biases"]),
        )
    except KeyError as exc:
        raise GateError(f"model document missing key {exc.args[0]!r}") from exc


def load_features(path: str | Path) -> tuple[list[str], np.ndarray, np.ndarray]:
    """Parse the feature JSONL: one {"id", "x", "metric"} object per line."""
    ids: list[str] = []
    rows: list[list[float]] = []
    metrics: list[float] = []
    dim: int | None = None
    with Path(path).open("r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            text = raw.strip()
            if not text:
                continue
            try:
                obj = json.loads(text)
            except json.JSONDecodeError as exc:
                raise GateError(f"line {lineno}: invalid JSON ({exc.msg})") from exc
            if not isinstance(obj, dict):
                raise GateError(f"line {lineno}: expected a JSON object")
            for key in ("id", "x", "metric"):
                if key not in obj:
                    raise GateError(f"line {lineno}: missing key {key!r}")
            x = obj["x"]
            if not isinstance(x, list) or not x:
                raise GateError(f"line {lineno}: x must be a non-empty list")
            if dim is None:
                dim = len(x)
            elif len(x) != dim:
                raise GateError(
                    f"line {lineno}: x has {len(x)} entries, earlier lines had {dim}"
                )
            ids.append(str(obj["id"]))
            rows.append([float(v) for v in x])
            metrics.append(float(obj["metric"]))
    if not rows:
        raise GateError(f"{path}: no feature rows")
    x_arr = np.asarray(rows, dtype=np.float64)
    m_arr = np.asarray(metrics, dtype=np.float64)
    if not (np.isfinite(x_arr).all() and np.isfinite(m_arr).all()):
        raise GateError(f"{path}: non-finite values in dataset")
    return ids, x_arr, m_arr
