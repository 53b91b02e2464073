"""figures <kind> <in.csv> <out-image> [--log-y] [--title STR]"""

from __future__ import annotations

import argparse
import sys

import matplotlib.pyplot as plt

from .render import REQUIRED_COLUMNS, FigureSpec, SchemaMismatch, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="figures", description=__doc__)
    parser.add_argument("kind", choices=sorted(REQUIRED_COLUMNS))
    parser.add_argument("input_csv")
    parser.add_argument("output_image")
    parser.add_argument("--log-y", action="store_true", dest="log_y")
    parser.add_argument("--title")
    args = parser.parse_args(argv)
    try:
        fig = render(FigureSpec(input_csv=args.input_csv, kind=args.kind,
                                output_path=args.output_image,
                                log_y=args.log_y, title=args.title))
        plt.close(fig)
    except SchemaMismatch as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {args.output_image}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
