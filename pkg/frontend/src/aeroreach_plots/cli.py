"""Standalone renderer: render --in <dir> --out <dir> --format svg|png."""

from __future__ import annotations

import argparse
import sys

from .bundles import BundleError, PlotBundle
from .render import render_reach, render_trajectory


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="render", description=__doc__)
    ap.add_argument("--in", dest="indir", required=True, help="emitted plot-data directory")
    ap.add_argument("--out", dest="outdir", required=True, help="figure output directory")
    ap.add_argument("--format", dest="fmt", default="png", choices=("png", "svg"))
    ap.add_argument("--dpi", type=int, default=130)
    args = ap.parse_args(argv)

    try:
        bundle = PlotBundle(args.indir, args.outdir, fmt=args.fmt, dpi=args.dpi)
        kind = bundle.kind()
        result = render_trajectory(bundle) if kind == "trajectory" else render_reach(bundle)
    except BundleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for f in result["figures"]:
        print(f)
    return 0


if __name__ == "__main__":
    sys.exit(main())
