#!/usr/bin/env python3
"""Run the full verification suite and write a machine-readable report.

Equivalent to `sigeo verify-all`; kept as a script so the suite can be
driven without installing the console entry point.

    python scripts/run_verification.py [--seed S] [--only KEY] [--out report.json]
"""

import argparse
import json
import sys
import time

from sigeo import acceptance


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--only", default="")
    parser.add_argument("--out", default="")
    args = parser.parse_args()

    t0 = time.perf_counter()
    results = acceptance.run_all(seed=args.seed, only=args.only or None)
    for r in results:
        print(f"{r.line()}  ({r.seconds:.1f}s)")
    total = time.perf_counter() - t0
    print(f"{sum(r.passed for r in results)}/{len(results)} passed in {total:.1f}s")

    if args.out:
        payload = {
            "seed": args.seed,
            "criteria": [
                {"name": r.name, "passed": r.passed, "seconds": round(r.seconds, 3),
                 "details": r.details}
                for r in results
            ],
            "all_passed": all(r.passed for r in results),
        }
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True, default=str)
        print(f"wrote {args.out}")

    return 0 if all(r.passed for r in results) else 2


if __name__ == "__main__":
    sys.exit(main())
