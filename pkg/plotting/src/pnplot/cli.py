"""Command-line front end for figure rendering.

Either a single --spec JSON file (the serialized form of PlotSpec) or the
mirrored flags below; mixing the two is rejected. Exit codes match the
simulation CLI convention: 0 on success, 2 for spec/input problems, 3 for
failures while writing the output.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import List, Optional

from .figure import PlotError, PlotSpec, render

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _limits(text: str):
    parts = text.split(":")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected low:high, got {text!r}")
    try:
        return (float(parts[0]), float(parts[1]))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pnplot",
        description="Render BER-versus-Eb/N0 figures from sweep CSV files.",
    )
    parser.add_argument("--spec", help="JSON file holding a serialized PlotSpec")
    parser.add_argument(
        "--csv", action="extend", nargs="+", default=None, metavar="FILE",
        help="input sweep CSVs (repeatable, glob-friendly)",
    )
    parser.add_argument("--out", help="output image path (.png or .svg)")
    parser.add_argument("--group-key", default=None, help="curve grouping column")
    parser.add_argument("--x-column", default=None)
    parser.add_argument("--y-column", default=None)
    parser.add_argument("--xlim", type=_limits, default=None, metavar="LOW:HIGH")
    parser.add_argument("--ylim", type=_limits, default=None, metavar="LOW:HIGH")
    parser.add_argument("--title", default=None)
    parser.add_argument(
        "--reference", action="append", default=None, metavar="GROUP",
        help="draw this group as a black dashed bound curve (repeatable)",
    )
    return parser


def _spec_from_args(args) -> PlotSpec:
    mirrored = (
        args.csv, args.out, args.group_key, args.x_column, args.y_column,
        args.xlim, args.ylim, args.title, args.reference,
    )
    if args.spec and any(v is not None for v in mirrored):
        raise PlotError("--spec conflicts with the mirrored plot flags")
    if args.spec:
        try:
            with open(args.spec) as fh:
                data = json.load(fh)
        except OSError as exc:
            raise PlotError(f"cannot read {args.spec}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise PlotError(f"{args.spec}: invalid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise PlotError(f"{args.spec}: spec must be a JSON object")
        return PlotSpec.from_dict(data)
    if not args.csv or not args.out:
        raise PlotError("either --spec or both --csv and --out are required")
    fields = {
        "csv_paths": tuple(args.csv),
        "out_path": args.out,
    }
    if args.group_key is not None:
        fields["group_key"] = args.group_key
    if args.x_column is not None:
        fields["x_column"] = args.x_column
    if args.y_column is not None:
        fields["y_column"] = args.y_column
    if args.xlim is not None:
        fields["x_limits"] = args.xlim
    if args.ylim is not None:
        fields["y_limits"] = args.ylim
    if args.title is not None:
        fields["title"] = args.title
    if args.reference is not None:
        fields["reference_groups"] = tuple(args.reference)
    return PlotSpec(**fields)


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = _spec_from_args(args)
        out = render(spec)
    except PlotError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print(f"wrote {out}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
