"""Command-line wrapper: ``figures --kind trace --in a.csv --out fig.png``.

Exit codes: 0 on success, 2 for unusable inputs (missing files, schema
mismatches, empty data).
"""

from __future__ import annotations

import argparse
import sys

from .render import CHART_KINDS, EmptyInput, FigureSpec, SchemaMismatch, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="figures",
                                     description="render experiment CSVs to PNG charts")
    parser.add_argument("--kind", choices=CHART_KINDS, required=True)
    parser.add_argument("--in", dest="inputs", nargs="+", required=True,
                        metavar="CSV")
    parser.add_argument("--out", required=True, metavar="PNG")
    parser.add_argument("--title", default="")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = FigureSpec(tuple(args.inputs), args.kind, args.out, args.title)
        out_path = render(spec)
    except (SchemaMismatch, EmptyInput, FileNotFoundError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    print(f"wrote {out_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
