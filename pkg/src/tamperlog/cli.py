"""Command-line front end: ``tamperlog {benchmark,ingest,prove,verify,tamper-test,stress}``."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Sequence

from . import bench
from .chunking import KB, ChunkConfig, ScriptedProbe, SystemProbe
from .loggen import generate_bytes, write_log
from .merkle import HashAlgorithm, build_tree, deserialize_proof, generate_proof, hash_leaf, hash_leaves, \
    recompute_root, serialize_proof
from .pipeline import AnchorError, AnchorStore, Finding, LogStore, check_truncation, fixed_clock, ingest_stream, \
    utc_now, verify_entry


def parse_size(text: str) -> int:
    """Byte count with an optional K/KB/M/MB suffix (binary multiples)."""
    t = text.strip().upper().removesuffix("B")
    mult = 1
    if t.endswith("K"):
        mult, t = KB, t[:-1]
    elif t.endswith("M"):
        mult, t = KB * KB, t[:-1]
    try:
        value = int(float(t) * mult)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a byte size: {text!r}") from None
    if value <= 0:
        raise argparse.ArgumentTypeError(f"size must be positive: {text!r}")
    return value


def _int_list(text: str) -> list[int]:
    return [int(x) for x in text.replace(",", " ").split()]


def _float_list(text: str) -> list[float]:
    return [float(x) for x in text.replace(",", " ").split()]


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--algo", choices=[a.value for a in HashAlgorithm], default="sha256")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out-dir", type=Path, default=Path("results"))
    p.add_argument("--format", choices=("csv", "json"), default="csv")


def _add_chunking(p: argparse.ArgumentParser) -> None:
    p.add_argument("--profile", type=Path, help="scripted memory-pressure profile, one ratio per line")
    p.add_argument("--chunk-init", type=parse_size, default=64 * KB)
    p.add_argument("--chunk-min", type=parse_size, default=4 * KB)
    p.add_argument("--chunk-max", type=parse_size, default=64 * KB)
    p.add_argument("--fixed-chunk", type=parse_size, default=None,
                   help="pin every chunk to this size (benchmark: fixed-mode size, default 16K)")
    p.add_argument("--anchor-every", type=int, default=1, help="anchor every N chunks (final root always)")


def _adaptive_cfg(args) -> ChunkConfig:
    return ChunkConfig(min_chunk=args.chunk_min, max_chunk=args.chunk_max, initial_chunk=args.chunk_init)


def _profile(args) -> list[float] | None:
    return list(ScriptedProbe.from_file(args.profile).profile) if args.profile else None


def _emit(runs, args) -> None:
    for path in bench.emit(runs, args.format, args.out_dir):
        print(f"wrote {path}")


def cmd_benchmark(args) -> int:
    runs = bench.run_all(
        scales=args.scales, runs=args.runs, algo=HashAlgorithm(args.algo), seed=args.seed,
        adaptive_cfg=_adaptive_cfg(args),
        fixed_cfg=ChunkConfig.fixed(args.fixed_chunk or 16 * KB),
        profile=_profile(args), anchor_every=args.anchor_every, n=args.n,
        workers=args.workers, deterministic_clock=args.fixed_clock,
        log=lambda msg: print(f"[benchmark] {msg}", file=sys.stderr),
    )
    _emit(runs, args)
    return 0


def cmd_ingest(args) -> int:
    algo = HashAlgorithm(args.algo)
    entries = LogStore.load(args.input).entries if args.input else generate_bytes(args.count, args.seed)
    cfg = ChunkConfig.fixed(args.fixed_chunk) if args.fixed_chunk else _adaptive_cfg(args)
    profile = _profile(args)
    probe = ScriptedProbe(profile) if profile else SystemProbe()
    args.out_dir.mkdir(parents=True, exist_ok=True)
    anchor_path = args.out_dir / "anchors.log"
    if anchor_path.exists() and not args.append_anchor:
        anchor_path.unlink()
    clock = fixed_clock() if args.fixed_clock else utc_now
    res = ingest_stream(entries, probe=probe, cfg=cfg, algo=algo,
                        anchor=AnchorStore(anchor_path, clock=clock), anchor_every=args.anchor_every)
    log_path = args.out_dir / "log.txt"
    res.store.save(log_path)
    s = res.stats
    print(f"entries={s.entries} batches={s.batch_count} rebuilds={s.rebuilds} anchors={s.anchors_written} "
          f"depth={res.tree.depth} wall_s={s.wall_time:.4f} logs_per_s={s.entries_per_second:.0f}")
    print(f"root={res.tree.root.hex()}")
    print(f"log={log_path} anchor={anchor_path}")
    return 0


def _tree_from_log(path: Path, algo: HashAlgorithm):
    store = LogStore.load(path)
    return store, build_tree(hash_leaves(store.entries, algo), algo)


def cmd_prove(args) -> int:
    _, tree = _tree_from_log(args.log, HashAlgorithm(args.algo))
    data = serialize_proof(generate_proof(tree, args.index))
    if args.output:
        args.output.write_bytes(data)
    else:
        sys.stdout.write(data.decode("ascii"))
    return 0


def cmd_verify(args) -> int:
    """Exit 0 when every checked entry is valid, 1 on tampering, 2 on usage errors.

    Without ``--proof`` the tree is rebuilt from the log as it is now, so a
    single modified entry fails every index. Proofs saved at commit time
    localize the damage.
    """
    anchor = AnchorStore(args.anchor)
    if not len(anchor):
        print("error: anchor store is empty", file=sys.stderr)
        return 2
    latest = anchor.load_latest()
    store = LogStore.load(args.log)
    finding = check_truncation(store, anchor)
    print(f"count check: {finding.value} (store {store.count}, anchored {latest.entry_count})")
    if finding is not Finding.CONSISTENT:
        return 1
    if args.proof:
        proof = deserialize_proof(args.proof.read_bytes())
        leaf = hash_leaf(store.entries[proof.leaf_index], proof.algorithm)
        ok = recompute_root(leaf, proof) == anchor.latest_for_count(proof.tree_size).root
        print(f"index {proof.leaf_index}: {'VALID' if ok else 'TAMPERED'}")
        return 0 if ok else 1
    tree = build_tree(hash_leaves(store.entries, latest.algorithm), latest.algorithm)
    indices = range(store.count) if args.all else args.index
    if not indices:
        print("error: give --index or --all", file=sys.stderr)
        return 2
    bad = 0
    for i in indices:
        try:
            verdict = verify_entry(store, tree, anchor, i)
        except (IndexError, AnchorError) as exc:
            print(f"index {i}: error: {exc}", file=sys.stderr)
            return 2
        if not verdict.valid:
            bad += 1
        if not args.all or not verdict.valid:
            print(f"index {i}: {'VALID' if verdict.valid else 'TAMPERED'}")
    if args.all:
        print(f"checked {len(indices)} entries, {bad} tampered")
    return 1 if bad else 0


def cmd_tamper_test(args) -> int:
    run = bench.bench_tamper(args.ratios, args.count, algo=HashAlgorithm(args.algo), seed=args.seed,
                             targets_only=args.targets_only, workers=args.workers)
    for row in run.rows:
        print(f"ratio={row['tamper_ratio']:<5} tampered={row['tampered']:<6} detected={row['detected']:<6} "
              f"P={row['precision']:.3f} R={row['recall']:.3f} F1={row['f1']:.3f} "
              f"t={row['detection_time_seconds'] * 1e3:.1f}ms")
    _emit([run], args)
    return 0


def cmd_stress(args) -> int:
    profile = _profile(args) or list(bench.DEFAULT_STRESS_PROFILE)
    run = bench.bench_stress(profile, args.total, args.window, algo=HashAlgorithm(args.algo),
                             seed=args.seed, cfg=_adaptive_cfg(args))
    for row in run.rows:
        print(f"window={row['window']} pressure={row['pressure']} chunk_kb={row['chunk_size_kb']} "
              f"batches={row['batch_count']}")
    _emit([run], args)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tamperlog", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("benchmark", help="run every experiment scenario and emit results")
    _add_common(p)
    _add_chunking(p)
    p.add_argument("--scales", type=_int_list, default=list(bench.DEFAULT_SCALES))
    p.add_argument("--runs", type=int, default=5)
    p.add_argument("--n", type=int, default=10000, help="tree size for verification/proof/hash/tamper/memory")
    p.add_argument("--workers", type=int, default=1, help="threads for the tamper verification sweep")
    p.add_argument("--fixed-clock", action="store_true", help="pin anchor timestamps")
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("ingest", help="ingest a log (generated or from file) and anchor its roots")
    _add_common(p)
    _add_chunking(p)
    p.add_argument("--count", type=int, default=10000)
    p.add_argument("--input", type=Path, help="existing log file, one canonical entry per line")
    p.add_argument("--append-anchor", action="store_true", help="keep an existing anchors.log")
    p.add_argument("--fixed-clock", action="store_true")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("prove", help="print the inclusion proof of one entry")
    p.add_argument("--algo", choices=[a.value for a in HashAlgorithm], default="sha256")
    p.add_argument("--log", type=Path, required=True)
    p.add_argument("--index", type=int, required=True)
    p.add_argument("--output", type=Path)
    p.set_defaults(func=cmd_prove)

    p = sub.add_parser("verify", help="verify entries against the anchored root")
    p.add_argument("--log", type=Path, required=True)
    p.add_argument("--anchor", type=Path, required=True)
    p.add_argument("--index", type=int, action="append", default=[])
    p.add_argument("--all", action="store_true")
    p.add_argument("--proof", type=Path, help="check a serialized proof instead of regenerating it")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("tamper-test", help="modification sweep with set-based detection metrics")
    _add_common(p)
    p.add_argument("--ratios", type=_float_list, default=list(bench.DEFAULT_TAMPER_RATIOS))
    p.add_argument("--count", type=int, default=10000)
    p.add_argument("--targets-only", action="store_true", help="verify only the modified indices")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_tamper_test)

    p = sub.add_parser("stress", help="scripted memory-pressure ingestion")
    _add_common(p)
    _add_chunking(p)
    p.add_argument("--total", type=int, default=20000)
    p.add_argument("--window", type=int, default=2000)
    p.set_defaults(func=cmd_stress)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (AnchorError, OSError, ValueError, IndexError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
