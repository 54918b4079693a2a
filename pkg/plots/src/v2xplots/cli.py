"""Render a figure from a result CSV: `plot --in results.csv --fig fig5
--out fig5.png`. Exit status 0 on success, 2 on any input problem."""

from __future__ import annotations

import argparse
import sys

from .figures import FIGURES, PlotError, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plot", description="Render sweep-result figures from CSV.")
    parser.add_argument("--in", dest="inp", required=True,
                        help="result CSV path")
    parser.add_argument("--fig", dest="fig", required=True,
                        choices=sorted(FIGURES), help="figure id")
    parser.add_argument("--out", required=True, help="image output path")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = render(args.inp, args.fig, args.out)
    except (PlotError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    print(f"wrote {args.out} ({len(spec.series)} series)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
