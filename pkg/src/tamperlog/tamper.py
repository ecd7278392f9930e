"""Attack simulation (modification, deletion, injection, replay) and
set-based detection metrics."""
from __future__ import annotations

import random
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import AbstractSet, Iterable, Mapping

from .merkle import MerkleTree, generate_proof, hash_leaf, recompute_root
from .pipeline import LogStore

CORRUPTION_MARKER = b"~T"


class TamperKind(str, Enum):
    MODIFICATION = "modification"
    DELETION = "deletion"
    INJECTION = "injection"
    REPLAY = "replay"


class StructuralMismatch(ValueError):
    """Store size differs from the committed tree; use check_truncation."""


@dataclass(frozen=True)
class TamperPlan:
    kind: TamperKind
    targets: frozenset[int]
    seed: int = 0
    # replay only: target index -> source index
    sources: Mapping[int, int] = field(default_factory=dict)

    def validate(self, n: int) -> None:
        if not self.targets:
            raise ValueError(f"{self.kind.value} plan has no target indices")
        bad = [i for i in self.targets if not 0 <= i < n]
        if bad:
            raise IndexError(f"target index {min(bad)} out of range; valid range is [0, {n})")
        if self.kind is TamperKind.REPLAY:
            for i in self.targets:
                if i not in self.sources:
                    raise ValueError(f"replay target {i} has no source index")
                j = self.sources[i]
                if j == i:
                    raise ValueError(f"replay of index {i} onto itself")
                if not 0 <= j < n:
                    raise IndexError(f"replay source {j} out of range; valid range is [0, {n})")


def make_plan(kind: TamperKind | str, n: int, ratio: float, seed: int = 0) -> TamperPlan:
    """Pick ``round(ratio * n)`` distinct targets uniformly with ``seed``."""
    kind = TamperKind(kind)
    if not 0.0 <= ratio <= 1.0:
        raise ValueError(f"ratio must lie in [0, 1], got {ratio}")
    rng = random.Random(seed)
    k = round(ratio * n)
    targets = frozenset(rng.sample(range(n), k))
    sources: dict[int, int] = {}
    if kind is TamperKind.REPLAY:
        if n < 2 and k:
            raise ValueError("replay needs at least two entries")
        for i in sorted(targets):
            j = rng.randrange(n - 1)
            sources[i] = j if j < i else j + 1
    return TamperPlan(kind, targets, seed, sources)


def corrupt(entry: bytes, seed: int, index: int) -> bytes:
    """Flip one seeded byte and append a marker; never equal to ``entry``
    and never introduces a line break."""
    rng = random.Random(f"{seed}:{index}")
    out = bytearray(entry)
    if out:
        pos = rng.randrange(len(out))
        while True:
            flipped = out[pos] ^ rng.randrange(1, 256)
            if flipped not in (0x0A, 0x0D):
                break
        out[pos] = flipped
    return bytes(out) + CORRUPTION_MARKER


def apply_modification(store: LogStore, plan: TamperPlan) -> LogStore:
    _expect(plan, TamperKind.MODIFICATION)
    plan.validate(store.count)
    entries = list(store.entries)
    for i in plan.targets:
        entries[i] = corrupt(entries[i], plan.seed, i)
    return LogStore(entries)


def apply_deletion(store: LogStore, plan: TamperPlan) -> LogStore:
    _expect(plan, TamperKind.DELETION)
    plan.validate(store.count)
    return LogStore(e for i, e in enumerate(store.entries) if i not in plan.targets)


def fabricate(seed: int, index: int) -> bytes:
    rng = random.Random(f"inject:{seed}:{index}")
    return f"{index}|0|dev-forged|temperature|{rng.uniform(0, 50):.3f}|info|injected".encode()


def apply_injection(store: LogStore, plan: TamperPlan) -> LogStore:
    """Insert one fabricated entry before each target position (original numbering)."""
    _expect(plan, TamperKind.INJECTION)
    plan.validate(store.count)
    entries = list(store.entries)
    for i in sorted(plan.targets, reverse=True):
        entries.insert(i, fabricate(plan.seed, i))
    return LogStore(entries)


def apply_replay(store: LogStore, plan: TamperPlan) -> LogStore:
    _expect(plan, TamperKind.REPLAY)
    plan.validate(store.count)
    entries = list(store.entries)
    original = store.entries
    for i in plan.targets:
        entries[i] = original[plan.sources[i]]
    return LogStore(entries)


_APPLY = {
    TamperKind.MODIFICATION: apply_modification,
    TamperKind.DELETION: apply_deletion,
    TamperKind.INJECTION: apply_injection,
    TamperKind.REPLAY: apply_replay,
}


def apply(store: LogStore, plan: TamperPlan) -> LogStore:
    return _APPLY[plan.kind](store, plan)


def _expect(plan: TamperPlan, kind: TamperKind) -> None:
    if plan.kind is not kind:
        raise ValueError(f"expected a {kind.value} plan, got {plan.kind.value}")


def _ratio(num: int, den: int) -> float:
    return num / den if den else 1.0


@dataclass(frozen=True)
class DetectionReport:
    tampered: frozenset[int]
    detected: frozenset[int]
    detection_time: float = 0.0

    @property
    def tp(self) -> int:
        return len(self.detected & self.tampered)

    @property
    def fp(self) -> int:
        return len(self.detected - self.tampered)

    @property
    def fn(self) -> int:
        return len(self.tampered - self.detected)

    @property
    def precision(self) -> float:
        return _ratio(self.tp, self.tp + self.fp)

    @property
    def recall(self) -> float:
        return _ratio(self.tp, self.tp + self.fn)

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else 0.0


def detect_tampering(tree: MerkleTree, trusted_root: bytes, mutated: LogStore,
                     tampered: AbstractSet[int] = frozenset(), *,
                     indices: Iterable[int] | None = None,
                     workers: int = 1) -> DetectionReport:
    """Verify entries of ``mutated`` against proofs from the committed ``tree``.

    Scans every index unless ``indices`` narrows the sweep.  Only the sweep
    is timed.
    """
    if mutated.count != tree.leaf_count:
        raise StructuralMismatch(
            f"store holds {mutated.count} entries but the committed tree has {tree.leaf_count}; "
            "per-index detection is undefined after deletion/injection, run check_truncation instead")
    algo = tree.algorithm
    ds = tree.domain_separated
    entries = mutated.entries
    sweep = range(tree.leaf_count) if indices is None else sorted(set(indices))

    def bad(i: int) -> bool:
        leaf = hash_leaf(entries[i], algo, domain_separated=ds)
        return recompute_root(leaf, generate_proof(tree, i), domain_separated=ds) != trusted_root

    start = time.perf_counter()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            flags = list(pool.map(bad, sweep))
        detected = frozenset(i for i, f in zip(sweep, flags) if f)
    else:
        detected = frozenset(i for i in sweep if bad(i))
    elapsed = time.perf_counter() - start
    return DetectionReport(frozenset(tampered), detected, elapsed)
