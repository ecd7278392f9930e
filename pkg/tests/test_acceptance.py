"""Acceptance suite: one test per criterion, summarised as ACnn PASS/FAIL lines."""
import csv
import random
import subprocess
import sys
import time

import pytest

from oracles import brute_force_sibling_count
from tamperlog.bench import MEASURED_COLUMNS, TIMING_COLUMNS, bench_ingestion, bench_stress, bench_tamper
from tamperlog.chunking import KB, ChunkConfig, ScriptedProbe, adjustment_factor
from tamperlog.loggen import generate_bytes
from tamperlog.merkle import HashAlgorithm, build_tree, generate_proof, hash_leaf, hash_leaves, recompute_root
from tamperlog.pipeline import AnchorStore, Finding, check_truncation, ingest_stream, verify_with_root
from tamperlog.tamper import TamperKind, TamperPlan, apply, detect_tampering, make_plan

CALM = [0.5]


def commit(n, algo=HashAlgorithm.SHA256, seed=42):
    anchor = AnchorStore()
    res = ingest_stream(generate_bytes(n, seed), probe=ScriptedProbe(CALM), algo=algo, anchor=anchor)
    return res, anchor


@pytest.fixture(scope="module")
def committed_10k():
    return commit(10000)


@pytest.mark.acceptance(1, "proof lengths 14/14/14/14/8 on 10000 leaves, brute-force cross-check, < 5 s")
def test_ac01_proof_lengths():
    start = time.perf_counter()
    tree = build_tree(hash_leaves(generate_bytes(10000, 42)))
    expected = {0: 14, 2500: 14, 5000: 14, 7500: 14, 9999: 8}
    for index, length in expected.items():
        proof = generate_proof(tree, index)
        assert len(proof.siblings) == length
        assert brute_force_sibling_count(10000, index) == length
        assert recompute_root(tree.leaf(index), proof) == tree.root
    assert time.perf_counter() - start < 5.0


@pytest.mark.acceptance(2, "tree depths 11/14/15/17/18 for n = 1000..100000, < 30 s")
def test_ac02_tree_depths():
    start = time.perf_counter()
    depths = {n: build_tree(hash_leaves(generate_bytes(n, 42))).depth
              for n in (1000, 5000, 10000, 50000, 100000)}
    assert depths == {1000: 11, 5000: 14, 10000: 15, 50000: 17, 100000: 18}
    assert time.perf_counter() - start < 30.0


@pytest.mark.acceptance(3, "tamper sweep 1-50 %: detected == tampered, P = R = F1 = 1.0, < 60 s")
def test_ac03_tamper_table():
    start = time.perf_counter()
    run = bench_tamper((0.01, 0.05, 0.10, 0.20, 0.50), 10000)
    assert [(r["tampered"], r["detected"]) for r in run.rows] == [
        (100, 100), (500, 500), (1000, 1000), (2000, 2000), (5000, 5000)]
    for row in run.rows:
        assert (row["precision"], row["recall"], row["f1"]) == (1.0, 1.0, 1.0)
    assert time.perf_counter() - start < 60.0


@pytest.mark.acceptance(4, "10 % modification detects exactly 1000 entries, every metric <= 1.0")
def test_ac04_no_double_count(committed_10k):
    res, anchor = committed_10k
    plan = make_plan(TamperKind.MODIFICATION, 10000, 0.10, seed=42)
    report = detect_tampering(res.tree, anchor.load_latest().root, apply(res.store, plan), plan.targets)
    assert len(report.detected) == 1000
    assert report.tp == 1000 and report.fp == 0 and report.fn == 0
    assert all(m <= 1.0 for m in (report.precision, report.recall, report.f1))


@pytest.mark.acceptance(5, "one rebuild per chunk; adaptive ingestion time ratio 100k/10k < 20x")
def test_ac05_rebuild_once_per_chunk():
    entries = generate_bytes(5000, 42)
    rng = random.Random(5)
    configs = [ChunkConfig(), ChunkConfig.fixed(4 * KB), ChunkConfig.fixed(16 * KB)]
    for cfg in configs + [ChunkConfig.fixed(rng.randint(KB, 64 * KB)) for _ in range(3)]:
        res = ingest_stream(entries, probe=ScriptedProbe([rng.random() for _ in range(8)]), cfg=cfg)
        assert res.stats.rebuilds == res.stats.batch_count == len(res.stats.chunk_entries)
        assert res.stats.rebuilds < len(entries)

    def best_wall(n):
        data = generate_bytes(n, 42)
        return min(ingest_stream(data, probe=ScriptedProbe(CALM), cfg=ChunkConfig()).stats.wall_time
                   for _ in range(3))

    ratio = best_wall(100000) / best_wall(10000)
    print(f"ingestion time ratio 100k/10k = {ratio:.2f}")
    assert ratio < 20.0


@pytest.mark.acceptance(6, "25 randomized chunkings of 1000 entries give the single-shot root")
def test_ac06_chunking_invariance():
    entries = generate_bytes(1000, 42)
    reference = build_tree(hash_leaves(entries)).root
    rng = random.Random(6)
    batch_counts = set()
    for _ in range(25):
        lo = rng.randint(KB // 4, 8 * KB)
        cfg = ChunkConfig(min_chunk=lo, max_chunk=lo * rng.randint(1, 8), initial_chunk=lo)
        profile = [rng.random() for _ in range(rng.randint(1, 20))]
        res = ingest_stream(entries, probe=ScriptedProbe(profile), cfg=cfg,
                            rebuild_mode=rng.choice(["suffix", "full"]))
        assert res.tree.root == reference
        batch_counts.add(res.stats.batch_count)
    assert len(batch_counts) > 5


@pytest.mark.acceptance(7, "10000 single-bit flips all verify invalid, < 60 s")
def test_ac07_bit_flip_fuzz(committed_10k):
    res, anchor = committed_10k
    trusted = anchor.load_latest().root
    rng = random.Random(7)
    start = time.perf_counter()
    misses = 0
    for _ in range(10000):
        i = rng.randrange(res.store.count)
        buf = bytearray(res.store[i])
        bit = rng.randrange(8 * len(buf))
        buf[bit // 8] ^= 1 << (bit % 8)
        if verify_with_root(bytes(buf), res.tree, i, trusted).valid:
            misses += 1
    assert misses == 0
    assert time.perf_counter() - start < 60.0


@pytest.mark.acceptance(8, "deletion -> TRUNCATED, injection -> root mismatch, replay -> invalid")
def test_ac08_attack_surface(committed_10k):
    res, anchor = committed_10k
    trusted = anchor.load_latest().root
    store, tree = res.store, res.tree

    deleted = apply(store, TamperPlan(TamperKind.DELETION, frozenset({10, 5000, 9999})))
    assert check_truncation(deleted, anchor) is Finding.TRUNCATED

    injected = apply(store, TamperPlan(TamperKind.INJECTION, frozenset({4000})))
    inflated = build_tree(hash_leaves(injected.entries))
    assert inflated.root != trusted
    assert check_truncation(injected, anchor) is Finding.GROWN
    assert not verify_with_root(injected[4001], inflated, 4001, trusted).valid  # legitimate, shifted
    assert not verify_with_root(injected[0], inflated, 0, trusted).valid

    plan = TamperPlan(TamperKind.REPLAY, frozenset({7000}), sources={7000: 6990})
    replayed = apply(store, plan)
    assert replayed[7000] == store[6990]
    assert not verify_with_root(replayed[7000], tree, 7000, trusted).valid
    assert verify_with_root(replayed[6990], tree, 6990, trusted).valid


@pytest.mark.acceptance(9, "stress profile: shrinking chunks under pressure, partial recovery, more batches")
def test_ac09_stress_shape():
    rows = bench_stress((0.25, 0.85, 0.85, 0.85, 0.25), total=20000, window=2000).rows
    sizes = [r["chunk_size_bytes"] for r in rows]
    batches = [r["batch_count"] for r in rows]
    baseline, stress, recovery = sizes[0], sizes[1:4], sizes[4]
    assert stress[0] > stress[1] > stress[2]
    assert stress[0] < baseline
    assert stress[2] < recovery < baseline
    assert min(batches[1:4]) > batches[0]


@pytest.mark.acceptance(10, "adjustment factor branch table and boundaries")
def test_ac10_branch_table():
    assert [adjustment_factor(p) for p in (0.85, 0.7, 0.25, 0.45)] == [0.8, 0.9, 1.1, 1.0]
    assert [adjustment_factor(p) for p in (0.3, 0.6, 0.8)] == [1.0, 1.0, 0.9]


@pytest.mark.acceptance(11, "sha256/blake2b parity: 32-byte digests, same detected sets, >= 130k logs/s at 100k")
def test_ac11_hash_parity():
    plan = make_plan(TamperKind.MODIFICATION, 10000, 0.10, seed=11)
    detected = {}
    for algo in HashAlgorithm:
        assert len(hash_leaf(b"x", algo)) == 32
        res, anchor = commit(10000, algo)
        assert len(res.tree.root) == 32
        report = detect_tampering(res.tree, anchor.load_latest().root, apply(res.store, plan), plan.targets)
        detected[algo] = report.detected
    assert detected[HashAlgorithm.SHA256] == detected[HashAlgorithm.BLAKE2B] == plan.targets

    (run,) = bench_ingestion([100000], modes=("adaptive",), runs=3)
    rate = run.rows[0]["logs_per_second"]
    print(f"adaptive ingestion at 100000 entries: {rate:,.0f} logs/s")
    assert rate >= 130000


def _read_deterministic(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header = rows[0]
    keep = [i for i, col in enumerate(header) if col not in TIMING_COLUMNS | MEASURED_COLUMNS]
    return [[row[i] for i in keep] for row in rows]


@pytest.mark.acceptance(12, "two seeded benchmark runs give identical CSVs outside timing columns")
def test_ac12_determinism(tmp_path):
    profile = tmp_path / "profile.txt"
    profile.write_text("0.25\n0.85\n0.85\n0.85\n0.25\n")
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        subprocess.run([sys.executable, "-m", "tamperlog", "benchmark", "--fixed-clock", "--seed", "42",
                        "--profile", str(profile), "--runs", "1", "--out-dir", str(out)],
                       check=True, capture_output=True)
        outs.append(out)
    files = sorted(p.name for p in outs[0].glob("*.csv"))
    assert len(files) == 9
    assert files == sorted(p.name for p in outs[1].glob("*.csv"))
    for name in files:
        assert _read_deterministic(outs[0] / name) == _read_deterministic(outs[1] / name), name
