"""Experiment scenarios and the CSV/JSON results emitter.

Each ``bench_*`` function returns a :class:`BenchRun` whose rows carry the
CSV columns listed in :data:`CSV_COLUMNS` plus optional extra keys that only
appear in the JSON bundle.
"""
from __future__ import annotations

import csv
import gc
import json
import math
import os
import platform
import random
import statistics
import sys
import tempfile
import time
import tracemalloc
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Callable, Sequence

from . import __version__
from .chunking import KB, ChunkConfig, MemoryProbe, ScriptedProbe, SystemProbe
from .loggen import PRNG_ID, generate_bytes
from .merkle import (
    HashAlgorithm,
    build_tree,
    generate_proof,
    hash_leaves,
    serialize_proof,
)
from .pipeline import AnchorStore, LogStore, fixed_clock, ingest_stream, utc_now, verify_batch, verify_entry
from .tamper import TamperKind, apply_modification, detect_tampering, make_plan

DEFAULT_SCALES = (1000, 5000, 10000, 50000, 100000)
DEFAULT_BATCH_SIZES = (10, 50, 100, 500, 1000)
DEFAULT_PROOF_INDICES = (0, 2500, 5000, 7500, 9999)
DEFAULT_TAMPER_RATIOS = (0.01, 0.05, 0.10, 0.20, 0.50)
DEFAULT_STRESS_PROFILE = (0.25, 0.85, 0.85, 0.85, 0.25)


def default_proof_indices(n: int) -> tuple[int, ...]:
    """First, quartile and last indices; the reference set when n = 10000."""
    if n == 10000:
        return DEFAULT_PROOF_INDICES
    return tuple(sorted({0, n // 4, n // 2, 3 * n // 4, n - 1}))


ADAPTIVE_CONFIG = ChunkConfig()  # 64 KB initial
FIXED_CONFIG = ChunkConfig.fixed(16 * KB)

CSV_COLUMNS: dict[str, tuple[str, ...]] = {
    "ingestion": ("log_count", "logs_per_second", "logs_per_second_std"),
    "verification": ("batch_size", "avg_time_per_entry_ms"),
    "proof": ("index", "proof_size_bytes", "proof_len"),
    "hash_compare": ("algorithm", "ingestion_rate_logs_per_sec", "verification_time_ms"),
    "tamper": ("tamper_ratio", "tampered", "detected", "precision", "recall", "f1", "detection_time_seconds"),
    "stress": ("window", "chunk_size_kb", "batch_count"),
    "memory": ("mode", "log_count", "digest_count", "digest_storage_bytes", "container_bytes"),
    "memory_peak": ("mode", "traced_peak_bytes", "peak_rss_delta_bytes"),
}

# Columns whose values depend on the machine's clock or allocator rather than
# on (seed, profile, clock source).
TIMING_COLUMNS = frozenset({
    "logs_per_second", "logs_per_second_std", "avg_time_per_entry_ms",
    "ingestion_rate_logs_per_sec", "verification_time_ms", "detection_time_seconds",
})
MEASURED_COLUMNS = frozenset({"traced_peak_bytes", "peak_rss_delta_bytes"})

FILE_NAMES = {
    "ingestion_adaptive": "ingestion_adaptive",
    "ingestion_fixed": "ingestion_fixed",
    "verification": "verification_batch",
    "proof": "proof_results",
    "hash_compare": "hash_algorithms",
    "tamper": "tampering_detection",
    "stress": "controlled_stress",
    "memory": "memory",
    "memory_peak": "memory_peak",
}


def machine_descriptor() -> dict[str, Any]:
    return {
        "platform": platform.platform(),
        "machine": platform.machine(),
        "processor": platform.processor() or "unknown",
        "cpu_count": os.cpu_count(),
        "python": f"{platform.python_implementation()} {platform.python_version()}",
    }


def make_metadata(algo: HashAlgorithm, seed: int, **extra: Any) -> dict[str, Any]:
    clock = time.get_clock_info("perf_counter")
    meta = {
        "machine": machine_descriptor(),
        "algorithm": algo.value,
        "seed": seed,
        "artifact_version": __version__,
        "prng": PRNG_ID,
        "clock": {"name": "perf_counter", "resolution_s": clock.resolution, "monotonic": clock.monotonic},
    }
    meta.update(extra)
    return meta


@dataclass
class BenchRun:
    scenario: str
    name: str
    params: dict[str, Any]
    runs: int
    rows: list[dict[str, Any]]
    metadata: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.runs < 1:
            raise ValueError("runs must be >= 1")


def _mean_std(values: Sequence[float]) -> tuple[float, float]:
    if len(values) == 1:
        return values[0], 0.0
    return statistics.fmean(values), statistics.stdev(values)


def _probe_factory(profile: Sequence[float] | None) -> Callable[[], MemoryProbe]:
    if profile is None:
        return SystemProbe
    return lambda: ScriptedProbe(profile)


def bench_ingestion(scales: Sequence[int] = DEFAULT_SCALES, modes: Sequence[str] = ("adaptive", "fixed"),
                    runs: int = 5, *, algo: HashAlgorithm = HashAlgorithm.SHA256, seed: int = 42,
                    adaptive_cfg: ChunkConfig = ADAPTIVE_CONFIG, fixed_cfg: ChunkConfig = FIXED_CONFIG,
                    profile: Sequence[float] | None = None, anchor_every: int = 1,
                    clock=utc_now) -> list[BenchRun]:
    """One BenchRun per mode; one row per scale with mean/std over ``runs``."""
    make_probe = _probe_factory(profile)
    results = {m: [] for m in modes}
    for n in scales:
        entries = generate_bytes(n, seed)
        for mode in modes:
            if mode not in ("adaptive", "fixed"):
                raise ValueError(f"unknown ingestion mode {mode!r}")
            cfg = adaptive_cfg if mode == "adaptive" else fixed_cfg
            rates, walls, batches, depth = [], [], [], 0
            for _ in range(runs):
                with tempfile.TemporaryDirectory() as tmp:
                    anchor = AnchorStore(Path(tmp) / "anchors.log", clock=clock)
                    gc.collect()
                    res = ingest_stream(entries, probe=make_probe(), cfg=cfg, algo=algo,
                                        anchor=anchor, anchor_every=anchor_every)
                rates.append(res.stats.entries_per_second)
                walls.append(res.stats.wall_time)
                batches.append(res.stats.batch_count)
                depth = res.tree.depth
            rate, rate_std = _mean_std(rates)
            wall, wall_std = _mean_std(walls)
            results[mode].append({
                "log_count": n,
                "logs_per_second": rate,
                "logs_per_second_std": rate_std,
                "wall_time_s": wall,
                "wall_time_s_std": wall_std,
                "depth": depth,
                "batches": batches[-1],
            })
    meta = make_metadata(algo, seed, probe="scripted" if profile is not None else "system")
    return [
        BenchRun("ingestion", f"ingestion_{mode}",
                 {"scales": list(scales), "mode": mode,
                  "chunk_config": asdict(adaptive_cfg if mode == "adaptive" else fixed_cfg)},
                 runs, rows, meta)
        for mode, rows in results.items()
    ]


def _committed(n: int, seed: int, algo: HashAlgorithm, clock=utc_now):
    entries = generate_bytes(n, seed)
    anchor = AnchorStore(clock=clock)
    res = ingest_stream(entries, probe=ScriptedProbe([0.5]), algo=algo, anchor=anchor)
    return res.store, res.tree, anchor


def bench_verification(batch_sizes: Sequence[int] = DEFAULT_BATCH_SIZES, *, n: int = 10000,
                       runs: int = 5, algo: HashAlgorithm = HashAlgorithm.SHA256, seed: int = 42,
                       clock=utc_now) -> BenchRun:
    store, tree, anchor = _committed(n, seed, algo, clock)
    rng = random.Random(seed)
    verify_entry(store, tree, anchor, 0)  # warm-up
    rows = []
    for size in batch_sizes:
        indices = [rng.randrange(n) for _ in range(size)]
        per_entry, totals, valid = [], [], 0
        for _ in range(runs):
            res = verify_batch(store, tree, anchor, indices)
            per_entry.append(res.per_entry_seconds * 1e3)
            totals.append(res.total_seconds * 1e3)
            valid = sum(1 for v in res.verdicts if v is not None and v.valid)
        rows.append({
            "batch_size": size,
            "avg_time_per_entry_ms": statistics.fmean(per_entry),
            "total_time_ms": statistics.fmean(totals),
            "valid": valid,
        })
    return BenchRun("verification", "verification", {"n": n, "batch_sizes": list(batch_sizes)},
                    runs, rows, make_metadata(algo, seed))


def bench_proofs(indices: Sequence[int] = DEFAULT_PROOF_INDICES, *, n: int = 10000, runs: int = 5,
                 algo: HashAlgorithm = HashAlgorithm.SHA256, seed: int = 42) -> BenchRun:
    tree = build_tree(hash_leaves(generate_bytes(n, seed), algo), algo)
    reps = 200
    rows = []
    for idx in indices:
        times = []
        for _ in range(runs):
            start = time.perf_counter()
            for _ in range(reps):
                proof = generate_proof(tree, idx)
            times.append((time.perf_counter() - start) / reps * 1e3)
        rows.append({
            "index": idx,
            "proof_size_bytes": len(serialize_proof(proof)),
            "proof_len": len(proof.siblings),
            "gen_time_ms": statistics.fmean(times),
        })
    return BenchRun("proof", "proof", {"n": n, "indices": list(indices)}, runs, rows,
                    make_metadata(algo, seed))


def bench_hash_compare(n: int = 10000, *, runs: int = 5, seed: int = 42, samples: int = 200,
                       clock=utc_now) -> BenchRun:
    entries = generate_bytes(n, seed)
    rng = random.Random(seed)
    picks = [rng.randrange(n) for _ in range(samples)]
    rows = []
    for algo in HashAlgorithm:
        rates = []
        for _ in range(runs):
            anchor = AnchorStore(clock=clock)
            res = ingest_stream(entries, probe=ScriptedProbe([0.5]), algo=algo, anchor=anchor)
            rates.append(res.stats.entries_per_second)
        batch = verify_batch(res.store, res.tree, anchor, picks)
        rows.append({
            "algorithm": algo.value,
            "ingestion_rate_logs_per_sec": statistics.fmean(rates),
            "verification_time_ms": batch.per_entry_seconds * 1e3,
            "digest_bytes": len(res.tree.root),
            "all_valid": all(v is not None and v.valid for v in batch.verdicts),
        })
    return BenchRun("hash_compare", "hash_compare", {"n": n}, runs, rows,
                    make_metadata(HashAlgorithm.SHA256, seed, algorithms=[a.value for a in HashAlgorithm]))


def bench_tamper(ratios: Sequence[float] = DEFAULT_TAMPER_RATIOS, n: int = 10000, *,
                 algo: HashAlgorithm = HashAlgorithm.SHA256, seed: int = 42,
                 targets_only: bool = False, workers: int = 1, clock=utc_now) -> BenchRun:
    store, tree, anchor = _committed(n, seed, algo, clock)
    trusted = anchor.latest_for_count(n).root
    rows = []
    for ratio in ratios:
        plan = make_plan(TamperKind.MODIFICATION, n, ratio, seed)
        mutated = apply_modification(store, plan) if plan.targets else store.copy()
        report = detect_tampering(tree, trusted, mutated, plan.targets,
                                  indices=plan.targets if targets_only else None, workers=workers)
        rows.append({
            "tamper_ratio": ratio,
            "tampered": len(report.tampered),
            "detected": len(report.detected),
            "precision": report.precision,
            "recall": report.recall,
            "f1": report.f1,
            "detection_time_seconds": report.detection_time,
            "tp": report.tp, "fp": report.fp, "fn": report.fn,
        })
    return BenchRun("tamper", "tamper",
                    {"n": n, "ratios": list(ratios), "targets_only": targets_only, "workers": workers},
                    1, rows, make_metadata(algo, seed, parallel=workers > 1))


def bench_stress(profile: Sequence[float] = DEFAULT_STRESS_PROFILE, total: int = 20000, window: int = 2000,
                 *, algo: HashAlgorithm = HashAlgorithm.SHA256, seed: int = 42,
                 cfg: ChunkConfig = ADAPTIVE_CONFIG, clock=utc_now) -> BenchRun:
    entries = generate_bytes(total, seed)
    res = ingest_stream(entries, probe=ScriptedProbe(profile), cfg=cfg, algo=algo,
                        anchor=AnchorStore(clock=clock), window=window)
    rows = [{"window": w, "chunk_size_kb": round(size / KB, 3), "batch_count": batches,
             "chunk_size_bytes": size, "pressure": ScriptedProbe(profile).pressure_at(w)}
            for w, size, batches in res.stats.windows]
    return BenchRun("stress", "stress",
                    {"profile": list(profile), "total": total, "window": window, "chunk_config": asdict(cfg)},
                    1, rows, make_metadata(algo, seed, probe="scripted"))


def _container_bytes(levels) -> int:
    total = sys.getsizeof(levels)
    for level in levels:
        total += sys.getsizeof(level)
        total += sum(sys.getsizeof(d) for d in level)
    return total


def _peak_rss_bytes() -> int | None:
    try:
        import resource
    except ImportError:  # pragma: no cover - non-POSIX
        return None
    peak = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss
    return peak if sys.platform == "darwin" else peak * 1024


def bench_memory(n: int = 10000, modes: Sequence[str] = ("adaptive", "fixed", "single_shot"), *,
                 algo: HashAlgorithm = HashAlgorithm.SHA256, seed: int = 42,
                 clock=utc_now) -> list[BenchRun]:
    """Digest storage (deterministic) and measured peaks, as two runs."""
    entries = generate_bytes(n, seed)
    storage_rows, peak_rows = [], []
    for mode in modes:
        gc.collect()
        rss_before = _peak_rss_bytes()
        tracemalloc.start()
        if mode == "single_shot":
            tree = build_tree(hash_leaves(entries, algo), algo)
        elif mode in ("adaptive", "fixed"):
            cfg = ADAPTIVE_CONFIG if mode == "adaptive" else FIXED_CONFIG
            tree = ingest_stream(entries, probe=ScriptedProbe([0.5]), cfg=cfg, algo=algo,
                                 anchor=AnchorStore(clock=clock)).tree
        else:
            tracemalloc.stop()
            raise ValueError(f"unknown memory mode {mode!r}")
        _, traced_peak = tracemalloc.get_traced_memory()
        tracemalloc.stop()
        rss_after = _peak_rss_bytes()
        storage_rows.append({
            "mode": mode,
            "log_count": n,
            "digest_count": tree.digest_count,
            "digest_storage_bytes": tree.digest_count * len(tree.root),
            "container_bytes": _container_bytes(tree.levels),
        })
        peak_rows.append({
            "mode": mode,
            "traced_peak_bytes": traced_peak,
            "peak_rss_delta_bytes": "" if rss_before is None else rss_after - rss_before,
        })
        del tree
    meta = make_metadata(algo, seed, labels={
        "digest_storage_bytes": "digest count x 32 bytes",
        "container_bytes": "Python object sizes of level lists and digest bytes objects",
        "traced_peak_bytes": "tracemalloc peak during the build (Python allocations only)",
        "peak_rss_delta_bytes": "growth of process peak RSS during the build (0 if the peak was already higher)",
    })
    params = {"n": n, "modes": list(modes)}
    return [BenchRun("memory", "memory", params, 1, storage_rows, meta),
            BenchRun("memory_peak", "memory_peak", params, 1, peak_rows, meta)]


def _fmt(value: Any) -> str:
    if isinstance(value, float):
        if math.isinf(value) or math.isnan(value):
            return str(value)
        return repr(round(value, 6))
    return str(value)


class EmitError(ValueError):
    pass


def emit(results: Sequence[BenchRun], fmt: str, out_dir: str | Path) -> list[Path]:
    """Write one CSV per run (``fmt="csv"``) or one JSON bundle (``fmt="json"``)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for run in results:
        machine = run.metadata.get("machine")
        if not machine or "seed" not in run.metadata:
            raise EmitError(f"run {run.name!r} lacks machine descriptor or seed metadata; refusing to emit")
    written = []
    if fmt == "csv":
        for run in results:
            columns = CSV_COLUMNS[run.scenario]
            path = out / f"{FILE_NAMES[run.name]}.csv"
            with open(path, "w", newline="") as fh:
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(columns)
                for row in run.rows:
                    writer.writerow([_fmt(row[c]) for c in columns])
            written.append(path)
    elif fmt == "json":
        path = out / "results.json"
        bundle = {"runs": [asdict(r) for r in results]}
        path.write_text(json.dumps(bundle, indent=2, sort_keys=True, default=str) + "\n")
        written.append(path)
    else:
        raise EmitError(f"unknown format {fmt!r}; expected csv or json")
    return written


def load_json(path: str | Path) -> list[BenchRun]:
    bundle = json.loads(Path(path).read_text())
    return [BenchRun(**r) for r in bundle["runs"]]


def run_all(*, scales: Sequence[int] = DEFAULT_SCALES, runs: int = 5,
            algo: HashAlgorithm = HashAlgorithm.SHA256, seed: int = 42,
            adaptive_cfg: ChunkConfig = ADAPTIVE_CONFIG, fixed_cfg: ChunkConfig = FIXED_CONFIG,
            profile: Sequence[float] | None = None, anchor_every: int = 1,
            n: int = 10000, workers: int = 1, deterministic_clock: bool = False,
            log: Callable[[str], None] = lambda msg: None) -> list[BenchRun]:
    """Every scenario in sequence, as the ``benchmark`` subcommand runs them."""
    clock = fixed_clock() if deterministic_clock else utc_now
    stress_profile = profile if profile is not None else DEFAULT_STRESS_PROFILE
    out: list[BenchRun] = []
    log("ingestion")
    out += bench_ingestion(scales, runs=runs, algo=algo, seed=seed, adaptive_cfg=adaptive_cfg,
                           fixed_cfg=fixed_cfg, profile=profile, anchor_every=anchor_every, clock=clock)
    log("verification")
    out.append(bench_verification(n=n, runs=runs, algo=algo, seed=seed, clock=clock))
    log("proofs")
    out.append(bench_proofs(default_proof_indices(n), n=n, runs=runs, algo=algo, seed=seed))
    log("hash comparison")
    out.append(bench_hash_compare(n, runs=runs, seed=seed, clock=clock))
    log("tampering")
    out.append(bench_tamper(n=n, algo=algo, seed=seed, workers=workers, clock=clock))
    log("stress")
    out.append(bench_stress(stress_profile, algo=algo, seed=seed, cfg=adaptive_cfg, clock=clock))
    log("memory")
    out += bench_memory(n, algo=algo, seed=seed, clock=clock)
    return out
