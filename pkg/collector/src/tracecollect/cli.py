"""Command line front end: collect --models a,b --data DIR --cost MODE --out F."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .collect import collect
from .config import CollectError, CollectorConfig, parse_cost_mode


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="collect",
        description="Run pretrained image classifiers over an image folder "
        "and write a cascade trace file.",
    )
    parser.add_argument(
        "--models",
        required=True,
        metavar="A,B,...",
        help="comma-separated zoo names or TorchScript file paths",
    )
    parser.add_argument("--data", required=True, type=Path, help="image folder")
    parser.add_argument(
        "--cost",
        required=True,
        metavar="MODE",
        help='"flops", "latency", or "manual:V1,V2,..."',
    )
    parser.add_argument("--out", required=True, type=Path)
    parser.add_argument(
        "--labels",
        default="folder",
        help='"folder" (class subdirectories) or "csv:FILE" (default folder)',
    )
    parser.add_argument("--device", default="cpu")
    parser.add_argument("--batch", type=int, default=32)
    parser.add_argument("--image-size", type=int, default=224)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = CollectorConfig(
            models=tuple(m for m in args.models.split(",") if m),
            data=args.data,
            cost=parse_cost_mode(args.cost),
            out=args.out,
            labels=args.labels,
            device=args.device,
            batch_size=args.batch,
            image_size=args.image_size,
        )
        out = collect(config)
    except (CollectError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(
        f"wrote {out}: {len(config.models)} experts",
        file=sys.stderr,
    )
    return 0


def entry() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entry()
