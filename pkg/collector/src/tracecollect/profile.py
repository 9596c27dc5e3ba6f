"""Per-model cost measurement.

Three modes: analytic multiply-add count ("flops"), wall-clock median over
repeated single-image forwards ("latency"), and a passthrough for a value
the caller already has ("manual").
"""

from __future__ import annotations

import statistics
import time

import torch

from .config import CollectError

LATENCY_WARMUPS = 5
LATENCY_RUNS = 30


def profile_cost(
    model: torch.nn.Module,
    mode: str,
    example: torch.Tensor | None = None,
    value: float | None = None,
) -> float:
    """Return one positive cost number for the model under the given mode.

    flops and latency modes need an example input of batch size 1.
    """
    if mode == "manual":
        if value is None:
            raise CollectError("manual mode needs a value")
        return float(value)
    if mode not in ("flops", "latency"):
        raise CollectError(f"unsupported cost mode {mode!r}")
    if example is None or example.shape[0] != 1:
        raise CollectError(f"{mode} mode needs a single-image example input")
    if mode == "flops":
        if isinstance(model, torch.jit.ScriptModule):
            raise CollectError(
                "flops mode cannot inspect TorchScript files; "
                "use latency or manual costs for them"
            )
        return _count_flops(model, example)
    return _time_latency(model, example)


def _count_flops(model: torch.nn.Module, example: torch.Tensor) -> float:
    """Multiply-adds of conv and linear layers for one image.

    Other layer types (activations, pooling, normalization) are ignored;
    for classifiers they are a rounding error next to the conv stacks.
    """
    total = 0

    def conv_hook(module, inputs, output):
        nonlocal total
        out_elems = output.numel()
        per_out = (
            module.in_channels
            // module.groups
            * module.kernel_size[0]
            * module.kernel_size[1]
        )
        total += out_elems * per_out

    def linear_hook(module, inputs, output):
        nonlocal total
        total += output.numel() * module.in_features

    handles = []
    for module in model.modules():
        if isinstance(module, torch.nn.Conv2d):
            handles.append(module.register_forward_hook(conv_hook))
        elif isinstance(module, torch.nn.Linear):
            handles.append(module.register_forward_hook(linear_hook))
    try:
        with torch.no_grad():
            model(example)
    finally:
        for h in handles:
            h.remove()
    if total <= 0:
        raise CollectError("flops mode counted nothing (no conv or linear layers)")
    return float(total)


def _time_latency(model: torch.nn.Module, example: torch.Tensor) -> float:
    with torch.no_grad():
        for _ in range(LATENCY_WARMUPS):
            model(example)
        timings = []
        for _ in range(LATENCY_RUNS):
            start = time.perf_counter()
            model(example)
            timings.append(time.perf_counter() - start)
    return float(statistics.median(timings))
