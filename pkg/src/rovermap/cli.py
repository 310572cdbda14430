"""Command-line entry point.

Subcommands:
    run     --config <file> [--method cnn|mlesac] [--frames a..b] [--out dir]
    compare <manifestA> <manifestB> [--out dir]
    synth   --scene <file> --out <dir>

Exit codes: 0 success, 1 config error, 2 dataset error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .errors import ConfigInvalid, DatasetIncomplete, RoverMapError
from .pipeline import compare, load_run_config, parse_frame_range, run
from .synth import emit_dataset, parse_scene


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rovermap",
        description="Stereo-based 3D semantic terrain mapping")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="process a dataset into a semantic map")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--method", choices=("cnn", "mlesac"))
    p_run.add_argument("--frames", help="inclusive frame index range a..b")
    p_run.add_argument("--out")

    p_cmp = sub.add_parser("compare", help="tabulate metrics of two runs")
    p_cmp.add_argument("manifest_a")
    p_cmp.add_argument("manifest_b")
    p_cmp.add_argument("--out")

    p_syn = sub.add_parser("synth", help="render a synthetic dataset")
    p_syn.add_argument("--scene", required=True)
    p_syn.add_argument("--out", required=True)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "run":
            cfg = load_run_config(args.config)
            if args.method:
                cfg.method = args.method
            if args.frames:
                cfg.frame_range = parse_frame_range(args.frames)
            if args.out:
                cfg.out_dir = Path(args.out)
            result = run(cfg)
            print(f"processed {result.frames_processed} frames "
                  f"({result.warnings} warnings) -> {result.out_dir}")
            if result.report is not None:
                print(f"accuracy {result.report.accuracy:.4f}  "
                      f"IoU {result.report.iou:.4f}")
        elif args.command == "compare":
            table = compare(args.manifest_a, args.manifest_b, out_dir=args.out)
            print(table, end="")
        elif args.command == "synth":
            scene = parse_scene(args.scene)
            out = emit_dataset(scene, args.out)
            print(f"wrote {len(scene.trajectory)} frames -> {out}")
    except ConfigInvalid as e:
        print(f"config error: {e}", file=sys.stderr)
        return 1
    except DatasetIncomplete as e:
        print(f"dataset error: {e}", file=sys.stderr)
        return 2
    except (RoverMapError, OSError) as e:
        print(f"runtime failure: {e}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
