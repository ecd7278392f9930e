#!/usr/bin/env python3
"""Run every benchmark scenario and write CSVs plus a JSON bundle.

    python3 scripts/run_benchmark.py --out-dir results --runs 5
"""
import argparse
import sys

from tamperlog import bench


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--out-dir", default="results")
    ap.add_argument("--runs", type=int, default=5)
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--fixed-clock", action="store_true")
    args = ap.parse_args()

    runs = bench.run_all(runs=args.runs, seed=args.seed, deterministic_clock=args.fixed_clock,
                         log=lambda msg: print(f"[run] {msg}", file=sys.stderr))
    for fmt in ("csv", "json"):
        for path in bench.emit(runs, fmt, args.out_dir):
            print(path)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
