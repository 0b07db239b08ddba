#!/usr/bin/env python3
"""Export optimized-path profiles for plotting.

Writes gnuplot-ready tables of the path parameter, coordinates, and metric
speed for a few representative distance problems, plus the covering curve
of the Bernoulli segment.

    python scripts/geodesic_profile.py --outdir profiles/
"""

import argparse
import os
import sys

from sigeo import cli as sigeo_cli


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--outdir", default="profiles")
    args = parser.parse_args()
    os.makedirs(args.outdir, exist_ok=True)

    jobs = [
        ["distance", "--model", "bernoulli", "--from", "0.25", "--to", "0.75",
         "--no-timestamp", "--emit-curve", os.path.join(args.outdir, "bernoulli_path.csv")],
        ["distance", "--model", "categorical:3", "--from", "0.7,0.2", "--to", "0.1,0.2",
         "--no-timestamp", "--emit-curve", os.path.join(args.outdir, "simplex_path.csv")],
        ["distance", "--model", "mixture", "--from", "0.3,-1.0", "--to", "0.3,1.0",
         "--no-timestamp", "--emit-curve", os.path.join(args.outdir, "mixture_path.csv")],
        ["hausdorff", "--model", "bernoulli", "--region", "0.25:0.75", "--points", "1201",
         "--no-timestamp", "--emit", os.path.join(args.outdir, "bernoulli_cover.csv")],
    ]
    for job in jobs:
        code = sigeo_cli.main(job)
        if code != 0:
            return code
    print(f"profiles written under {args.outdir}/")
    return 0


if __name__ == "__main__":
    sys.exit(main())
