#!/usr/bin/env python3
"""Print the chunk-size trajectory of a scripted memory-pressure run."""
import argparse

from tamperlog.bench import DEFAULT_STRESS_PROFILE, bench_stress
from tamperlog.chunking import ScriptedProbe


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--profile", help="file with one pressure per line")
    ap.add_argument("--total", type=int, default=20000)
    ap.add_argument("--window", type=int, default=2000)
    args = ap.parse_args()

    profile = ScriptedProbe.from_file(args.profile).profile if args.profile else DEFAULT_STRESS_PROFILE
    run = bench_stress(profile, args.total, args.window)
    print(f"{'window':>6} {'pressure':>8} {'chunk_kb':>9} {'batches':>7}")
    for row in run.rows:
        bar = "#" * round(row["chunk_size_kb"] / 2)
        print(f"{row['window']:>6} {row['pressure']:>8.2f} {row['chunk_size_kb']:>9.3f} {row['batch_count']:>7}  {bar}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
