"""Image folder scanning, labels, and preprocessing.

Two label sources:

- "folder": one subdirectory per class under the root; class index is the
  position of the subdirectory name in sorted order (the usual image-folder
  convention).
- "csv:FILE": a two-column csv (header optional) of relative image path and
  integer class index, for folders without the subdirectory layout.
"""

from __future__ import annotations

import csv
from pathlib import Path

import torch
from PIL import Image
from torchvision import transforms

from .config import CollectError

IMAGE_SUFFIXES = {".jpg", ".jpeg", ".png", ".bmp", ".webp"}

# standard ImageNet statistics; checkpoint models collected through this
# tool are expected to have trained with the same normalization
NORM_MEAN = (0.485, 0.456, 0.406)
NORM_STD = (0.229, 0.224, 0.225)


def scan_images(root: Path, labels: str = "folder") -> list[tuple[str, int]]:
    """Return (relative path, class index) pairs, sorted by path."""
    root = Path(root)
    if not root.is_dir():
        raise CollectError(f"dataset path {root} is not a directory")
    if labels == "folder":
        pairs = _scan_folder_layout(root)
    else:
        pairs = _scan_csv(root, Path(labels[len("csv:"):]))
    if not pairs:
        raise CollectError(f"no images found under {root}")
    return sorted(pairs)


def _scan_folder_layout(root: Path) -> list[tuple[str, int]]:
    classes = sorted(p.name for p in root.iterdir() if p.is_dir())
    if not classes:
        raise CollectError(f"{root} has no class subdirectories")
    pairs = []
    for index, name in enumerate(classes):
        for path in (root / name).rglob("*"):
            if path.suffix.lower() in IMAGE_SUFFIXES:
                pairs.append((path.relative_to(root).as_posix(), index))
    return pairs


def _scan_csv(root: Path, csv_path: Path) -> list[tuple[str, int]]:
    if not csv_path.is_file():
        raise CollectError(f"label csv {csv_path} not found")
    pairs = []
    with open(csv_path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or len(row) < 2:
                continue
            rel, label = row[0].strip(), row[1].strip()
            if not label.lstrip("-").isdigit():
                continue  # header or junk line
            if int(label) < 0:
                raise CollectError(f"negative label for {rel!r}")
            if not (root / rel).is_file():
                raise CollectError(f"labeled file {rel!r} missing under {root}")
            pairs.append((rel, int(label)))
    return pairs


def make_transform(image_size: int) -> transforms.Compose:
    resize = max(image_size, int(round(image_size * 256 / 224)))
    return transforms.Compose(
        [
            transforms.Resize(resize),
            transforms.CenterCrop(image_size),
            transforms.ToTensor(),
            transforms.Normalize(NORM_MEAN, NORM_STD),
        ]
    )


def load_batch(
    root: Path, rel_paths: list[str], transform: transforms.Compose
) -> torch.Tensor:
    """Decode and preprocess a batch of images into one float tensor."""
    rows = []
    for rel in rel_paths:
        with Image.open(Path(root) / rel) as img:
            rows.append(transform(img.convert("RGB")))
    return torch.stack(rows)
