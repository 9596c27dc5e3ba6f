"""Trace collector for expert cascades: run pretrained image classifiers
over an image folder and write the trace JSONL the cascade tooling consumes.

The collector is a pure producer. It never routes or searches; the only
contract with the downstream tooling is the trace file format.
"""

from .config import CollectError, CollectorConfig, CostMode, parse_cost_mode
from .collect import collect
from .dataset import scan_images
from .models import load_model
from .profile import profile_cost

__all__ = [
    "CollectError",
    "CollectorConfig",
    "CostMode",
    "collect",
    "load_model",
    "parse_cost_mode",
    "profile_cost",
    "scan_images",
]
