"""plots <kind> <input.csv> [...] -o out.(svg|png) [--logy]

Exit codes: 0 success, 1 usage error, 2 schema mismatch, 3 missing input.
"""

from __future__ import annotations

import argparse
import sys

from .render import SCHEMAS, PlotJob, SchemaError, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="plots", description=__doc__)
    parser.add_argument("kind", choices=sorted(SCHEMAS))
    parser.add_argument("inputs", nargs="+", help="input CSV file(s)")
    parser.add_argument("-o", "--output", required=True, help="output image (.svg or .png)")
    parser.add_argument("--logy", action="store_true", help="logarithmic y axis")
    args = parser.parse_args(argv)
    try:
        job = PlotJob(kind=args.kind, inputs=tuple(args.inputs), output=args.output,
                      logy=args.logy)
        info = render(job)
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"missing input: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {info.output}: {info.n_series} series, {info.n_points} points")
    return 0


if __name__ == "__main__":
    sys.exit(main())
