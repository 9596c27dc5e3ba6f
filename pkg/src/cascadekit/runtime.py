"""Streaming deployment: per-sample routing under a switchable config plus a
feedback controller that walks the collection ladder to hold a cost budget."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator

from .configset import ConfigCollection
from .routing import RouteOutcome, route_sample
from .trace import SampleRecord

DEFAULT_WINDOW = 256
DEFAULT_HYSTERESIS = 0.05


class StreamError(ValueError):
    """Collection unusable for streaming (empty, or missing expert costs)."""


def snap_index(collection: ConfigCollection, lam: float) -> int:
    """Index of the entry whose lambda is nearest; ties go to the lower one."""
    if not collection.entries:
        raise StreamError("collection has no entries")
    best = 0
    best_gap = abs(collection.entries[0].config.lam - lam)
    for i, entry in enumerate(collection.entries[1:], start=1):
        gap = abs(entry.config.lam - lam)
        if gap < best_gap:
            best, best_gap = i, gap
    return best


def nearest_cost_index(collection: ConfigCollection, target_cost: float) -> int:
    """Index whose calibration mean cost is nearest the target; ties go low."""
    if not collection.entries:
        raise StreamError("collection has no entries")
    best = 0
    best_gap = abs(collection.entries[0].report.mean_cost_raw - target_cost)
    for i, entry in enumerate(collection.entries[1:], start=1):
        gap = abs(entry.report.mean_cost_raw - target_cost)
        if gap < best_gap:
            best, best_gap = i, gap
    return best


@dataclass
class BudgetController:
    """Windowed cost feedback: too expensive steps down the ladder, too cheap
    steps up, a hysteresis band around the target suppresses chatter."""

    target_cost: float
    n_entries: int
    window: int = DEFAULT_WINDOW
    hysteresis: float = DEFAULT_HYSTERESIS
    current_index: int = 0
    _cost_sum: float = field(default=0.0, init=False, repr=False)
    _count: int = field(default=0, init=False, repr=False)

    def __post_init__(self) -> None:
        if self.target_cost <= 0.0:
            raise ValueError(f"target_cost must be positive, got {self.target_cost}")
        if self.window < 1:
            raise ValueError(f"window must be >= 1, got {self.window}")
        if self.hysteresis < 0.0:
            raise ValueError(f"hysteresis must be >= 0, got {self.hysteresis}")
        if self.n_entries < 1:
            raise ValueError("controller needs a non-empty collection")
        if not 0 <= self.current_index < self.n_entries:
            raise ValueError(
                f"current_index {self.current_index} out of range for "
                f"{self.n_entries} entries"
            )

    def observe(self, cost: float) -> int:
        """Feed one sample's cost; steps the index when a window completes."""
        self._cost_sum += cost
        self._count += 1
        if self._count >= self.window:
            self.current_index = controller_step(self, self._cost_sum / self._count)
            self._cost_sum = 0.0
            self._count = 0
        return self.current_index


def controller_step(controller: BudgetController, observed_mean_cost: float) -> int:
    """Next ladder index given a full window's mean cost (pure decision)."""
    target = controller.target_cost
    index = controller.current_index
    if observed_mean_cost > target * (1.0 + controller.hysteresis):
        index -= 1
    elif observed_mean_cost < target * (1.0 - controller.hysteresis):
        index += 1
    return min(max(index, 0), controller.n_entries - 1)


def route_stream(
    samples: Iterable[SampleRecord],
    collection: ConfigCollection,
    initial_lam: float | None = None,
    controller: BudgetController | None = None,
) -> Iterator[tuple[RouteOutcome, float]]:
    """Route samples one at a time, yielding (outcome, lambda used).

    Config switches happen only between samples: with a controller attached
    the index it publishes after sample k governs sample k+1.
    """
    if not collection.entries:
        raise StreamError("collection has no entries")
    if collection.experts is None:
        raise StreamError("collection carries no expert costs; cannot route")
    if controller is not None:
        index = controller.current_index
    elif initial_lam is not None:
        index = snap_index(collection, initial_lam)
    else:
        raise StreamError("either an initial lambda or a controller is required")
    experts = collection.experts
    for record in samples:
        config = collection.entries[index].config
        outcome = route_sample(record, experts, config)
        yield outcome, config.lam
        if controller is not None:
            index = controller.observe(outcome.cost)
