"""Command line entry: devil-extract --in <frames> --out <devb> [options]."""

from __future__ import annotations

import argparse
import sys

from .extract import ExtractorConfig, extract
from .formats import SidecarError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="devil-extract",
        description="Extract per-frame/segment features and dense flow into a DEVB file",
    )
    parser.add_argument("--in", dest="input_path", required=True, help=".devf file or image dir")
    parser.add_argument("--out", dest="output_path", required=True, help="DEVB output path")
    parser.add_argument("--image-backbone", default="grid")
    parser.add_argument("--segment-backbone", default="pooled")
    parser.add_argument("--flow-backbone", default="farneback")
    parser.add_argument("--ratio", type=float, default=0.25, help="segment length ratio")
    parser.add_argument("--grid", type=int, default=16, help="patch grid side (max 16)")
    parser.add_argument("--device", default="cpu")
    parser.add_argument("--mock", action="store_true", help="deterministic mock tensors")
    parser.add_argument("--seed", type=int, default=0)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = ExtractorConfig(
            input_path=args.input_path,
            output_path=args.output_path,
            image_backbone=args.image_backbone,
            segment_backbone=args.segment_backbone,
            flow_backbone=args.flow_backbone,
            segment_ratio=args.ratio,
            patch_grid=args.grid,
            device=args.device,
            mock=args.mock,
            seed=args.seed,
        )
        out = extract(config)
    except SidecarError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
