#!/usr/bin/env python3
"""Modification sweep with set-based metrics, under both hash algorithms."""
import argparse

from tamperlog.bench import DEFAULT_TAMPER_RATIOS, bench_tamper
from tamperlog.merkle import HashAlgorithm


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=10000)
    ap.add_argument("--seed", type=int, default=42)
    args = ap.parse_args()

    for algo in HashAlgorithm:
        run = bench_tamper(DEFAULT_TAMPER_RATIOS, args.n, algo=algo, seed=args.seed)
        for r in run.rows:
            print(f"{algo.value:8} ratio={r['tamper_ratio']:.2f} tampered={r['tampered']:5} "
                  f"detected={r['detected']:5} f1={r['f1']:.3f} t={r['detection_time_seconds']:.3f}s")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
