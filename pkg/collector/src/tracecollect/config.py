"""Collector run description and cost-mode parsing."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path


class CollectError(ValueError):
    """Raised for any collector failure the caller can act on."""


@dataclass(frozen=True)
class CostMode:
    """How per-model cost is obtained.

    kind is one of "flops", "latency", "manual". Manual mode carries the
    supplied values, one per model, in the order the models were named.
    """

    kind: str
    values: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in ("flops", "latency", "manual"):
            raise CollectError(f"unsupported cost mode {self.kind!r}")
        if self.kind == "manual" and not self.values:
            raise CollectError("manual cost mode needs a value per model")
        if any(v <= 0 or v != v for v in self.values):
            raise CollectError("manual costs must be positive and finite")


def parse_cost_mode(text: str) -> CostMode:
    """Parse a CLI cost spec: "flops", "latency", or "manual:1.5,3,8"."""
    if text in ("flops", "latency"):
        return CostMode(text)
    if text.startswith("manual:"):
        try:
            values = tuple(float(v) for v in text[len("manual:"):].split(","))
        except ValueError as exc:
            raise CollectError(f"bad manual cost list in {text!r}") from exc
        return CostMode("manual", values)
    raise CollectError(f"unsupported cost mode {text!r}")


@dataclass(frozen=True)
class CollectorConfig:
    """Everything one collect() run needs.

    models: zoo identifiers or paths to TorchScript files, at least two.
    data: image folder root.
    labels: "folder" (class subdirectory layout) or "csv:FILE" where FILE
        maps relative image path to integer class index.
    cost: see CostMode; manual values pair with models positionally.
    out: trace destination.
    """

    models: tuple[str, ...]
    data: Path
    cost: CostMode
    out: Path
    labels: str = "folder"
    device: str = "cpu"
    batch_size: int = 32
    image_size: int = 224

    def __post_init__(self):
        if len(self.models) < 2:
            raise CollectError("need at least 2 models to build a cascade trace")
        if len(set(self.models)) != len(self.models):
            raise CollectError("duplicate model identifiers")
        if self.cost.kind == "manual" and len(self.cost.values) != len(self.models):
            raise CollectError(
                f"{len(self.cost.values)} manual costs for {len(self.models)} models"
            )
        if not (self.labels == "folder" or self.labels.startswith("csv:")):
            raise CollectError(f"unsupported label source {self.labels!r}")
        if self.batch_size < 1:
            raise CollectError("batch_size must be positive")
        if self.image_size < 8:
            raise CollectError("image_size must be at least 8")
