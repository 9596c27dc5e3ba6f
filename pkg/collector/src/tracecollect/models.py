"""Model loading. An identifier is either a path to a TorchScript file or a
torchvision zoo name (loaded with its default pretrained weights)."""

from __future__ import annotations

from pathlib import Path

import torch

from .config import CollectError

SCRIPT_SUFFIXES = (".pt", ".pth", ".ts")


def model_name(identifier: str) -> str:
    """Display name for the trace header: zoo name, or the file stem."""
    if identifier.endswith(SCRIPT_SUFFIXES):
        return Path(identifier).stem
    return identifier


def load_model(identifier: str, device: str = "cpu") -> torch.nn.Module:
    """Load one classifier in eval mode on the requested device."""
    try:
        if identifier.endswith(SCRIPT_SUFFIXES):
            model = torch.jit.load(identifier, map_location=device)
        else:
            import torchvision.models

            model = torchvision.models.get_model(identifier, weights="DEFAULT")
            model = model.to(device)
    except CollectError:
        raise
    except Exception as exc:
        raise CollectError(f"failed to load model {identifier!r}: {exc}") from exc
    model.eval()
    return model
