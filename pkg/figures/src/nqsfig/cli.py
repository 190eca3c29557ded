"""Command-line entry point: nqsfig render --kind <k> --in <csv...> --out <img>.

Exit codes: 0 success, 2 schema error (bad kind, missing column, unreadable
file), 3 no plottable data after filtering.
"""
from __future__ import annotations

import argparse
import sys

from .figures import FIGURE_KINDS, DataError, FigureSpec, SchemaError, render


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="nqsfig", description="Render nqslab CSV outputs as figures")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    rend = sub.add_parser("render", help="render one figure from CSV inputs")
    rend.add_argument("--kind", required=True, choices=FIGURE_KINDS)
    rend.add_argument("--in", dest="inputs", required=True, nargs="+",
                      help="input CSV file(s)")
    rend.add_argument("--out", dest="output", required=True,
                      help="output image path")
    rend.add_argument("--title", default=None)
    args = parser.parse_args(argv)
    try:
        spec = FigureSpec(kind=args.kind, inputs=tuple(args.inputs),
                          output=args.output, title=args.title)
        report = render(spec)
    except SchemaError as exc:
        print(f"nqsfig: schema error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"nqsfig: no data: {exc}", file=sys.stderr)
        return 3
    if report.n_dropped:
        print(f"nqsfig: dropped {report.n_dropped} nonpositive/empty rows "
              f"for the log axis: {report.dropped}", file=sys.stderr)
    print(f"nqsfig: wrote {args.output}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
