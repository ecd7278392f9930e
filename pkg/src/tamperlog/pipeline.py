"""Chunked ingestion, root anchoring and verification against the anchor."""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Callable, Iterable, Iterator, Sequence

from .chunking import AdaptiveChunker, ChunkConfig, MemoryProbe
from .merkle import (
    HashAlgorithm,
    MerkleTree,
    TreeBuilder,
    generate_proof,
    hash_leaf,
    hash_leaves,
    recompute_root,
)

Clock = Callable[[], datetime]


def utc_now() -> datetime:
    return datetime.now(timezone.utc)


def fixed_clock(at: datetime | None = None) -> Clock:
    """A clock that always returns the same instant (for reproducible anchors)."""
    instant = at or datetime(2024, 1, 1, tzinfo=timezone.utc)
    return lambda: instant


class AnchorError(RuntimeError):
    pass


class AnchorWriteError(AnchorError):
    pass


class LogStore:
    """Ordered canonical entries; one line per entry when persisted."""

    def __init__(self, entries: Iterable[bytes] = ()) -> None:
        self.entries: list[bytes] = list(entries)

    @property
    def count(self) -> int:
        return len(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __getitem__(self, index: int) -> bytes:
        return self.entries[index]

    def extend(self, entries: Sequence[bytes]) -> None:
        self.entries.extend(entries)

    def copy(self) -> "LogStore":
        return LogStore(self.entries)

    def save(self, path: str | Path) -> None:
        from .loggen import write_log

        write_log(path, self.entries)

    @classmethod
    def load(cls, path: str | Path) -> "LogStore":
        from .loggen import read_log

        return cls(read_log(path))


@dataclass(frozen=True)
class AnchorRecord:
    sequence: int
    entry_count: int
    algorithm: HashAlgorithm
    root: bytes
    anchored_at: datetime

    def to_line(self) -> str:
        ts = self.anchored_at.isoformat(timespec="microseconds")
        return (f"seq={self.sequence} count={self.entry_count} algo={self.algorithm.value} "
                f"root={self.root.hex()} ts={ts}")

    @classmethod
    def from_line(cls, line: str) -> "AnchorRecord":
        fields = {}
        for token in line.split():
            key, sep, value = token.partition("=")
            if not sep:
                raise AnchorError(f"malformed anchor token {token!r}")
            fields[key] = value
        try:
            root = bytes.fromhex(fields["root"])
            if len(root) != 32:
                raise AnchorError(f"anchor root must be 32 bytes, got {len(root)}")
            return cls(
                sequence=int(fields["seq"]),
                entry_count=int(fields["count"]),
                algorithm=HashAlgorithm(fields["algo"]),
                root=root,
                anchored_at=datetime.fromisoformat(fields["ts"]),
            )
        except KeyError as exc:
            raise AnchorError(f"anchor line missing field {exc.args[0]!r}: {line!r}") from None
        except ValueError as exc:
            raise AnchorError(f"bad anchor line {line!r}: {exc}") from None


class AnchorStore:
    """Append-only root anchor, optionally mirrored to a file.

    Existing lines are never rewritten.  With ``path=None`` records live only
    in memory.
    """

    def __init__(self, path: str | Path | None = None, *, clock: Clock = utc_now) -> None:
        self.path = Path(path) if path is not None else None
        self.clock = clock
        self.records: list[AnchorRecord] = []
        if self.path is not None and self.path.exists():
            for line in self.path.read_text().splitlines():
                if line.strip():
                    self._check_order(rec := AnchorRecord.from_line(line))
                    self.records.append(rec)

    def _check_order(self, rec: AnchorRecord) -> None:
        if self.records:
            last = self.records[-1]
            if rec.sequence <= last.sequence:
                raise AnchorError(f"anchor sequence {rec.sequence} does not increase past {last.sequence}")
            if rec.entry_count < last.entry_count:
                raise AnchorError(f"anchor entry count went down: {last.entry_count} -> {rec.entry_count}")

    def store(self, root: bytes, entry_count: int, algorithm: HashAlgorithm) -> AnchorRecord:
        seq = self.records[-1].sequence + 1 if self.records else 0
        rec = AnchorRecord(seq, entry_count, algorithm, root, self.clock())
        self._check_order(rec)
        if self.path is not None:
            try:
                with open(self.path, "a", encoding="ascii") as fh:
                    fh.write(rec.to_line() + "\n")
            except OSError as exc:
                raise AnchorWriteError(f"could not append anchor to {self.path}: {exc}") from exc
        self.records.append(rec)
        return rec

    def load_latest(self) -> AnchorRecord:
        if not self.records:
            raise AnchorError("anchor store is empty; nothing has been committed")
        return self.records[-1]

    def latest_for_count(self, entry_count: int) -> AnchorRecord:
        """Most recent record committed at exactly ``entry_count`` entries."""
        if not self.records:
            raise AnchorError("anchor store is empty; nothing has been committed")
        for rec in reversed(self.records):
            if rec.entry_count == entry_count:
                return rec
        raise AnchorError(f"no anchored root for a tree of {entry_count} entries "
                          f"(latest anchor covers {self.records[-1].entry_count})")

    def __len__(self) -> int:
        return len(self.records)


@dataclass
class IngestStats:
    chunk_sizes: list[int] = field(default_factory=list)
    chunk_entries: list[int] = field(default_factory=list)
    windows: list[tuple[int, int, int]] = field(default_factory=list)  # (window, chunk bytes, batches)
    rebuilds: int = 0
    hash_ops: int = 0
    max_rebuild_ops: int = 0
    anchors_written: int = 0
    entries: int = 0
    wall_time: float = 0.0

    @property
    def batch_count(self) -> int:
        return len(self.chunk_entries)

    @property
    def entries_per_second(self) -> float:
        return self.entries / self.wall_time if self.wall_time > 0 else float("inf")


@dataclass
class IngestResult:
    store: LogStore
    tree: MerkleTree
    stats: IngestStats


class _ChunkReader:
    def __init__(self, source: Iterable[bytes]) -> None:
        self._it: Iterator[bytes] = iter(source)
        self._pending: bytes | None = None
        self.exhausted = False

    def read(self, budget: int, max_entries: int | None = None) -> list[bytes]:
        """Take entries while their total size stays within ``budget``; at least one."""
        chunk: list[bytes] = []
        used = 0
        if self._pending is not None:
            chunk.append(self._pending)
            used = len(self._pending)
            self._pending = None
        append = chunk.append
        for raw in self._it:
            if chunk and (used + len(raw) > budget or len(chunk) == max_entries):
                self._pending = raw
                return chunk
            append(raw)
            used += len(raw)
        self.exhausted = True
        return chunk

    @property
    def has_more(self) -> bool:
        return self._pending is not None or not self.exhausted


def ingest_stream(source: Iterable[bytes], *, probe: MemoryProbe | None = None,
                  cfg: ChunkConfig | None = None,
                  algo: HashAlgorithm = HashAlgorithm.SHA256,
                  anchor: AnchorStore | None = None,
                  window: int | None = None,
                  anchor_every: int = 1,
                  rebuild_mode: str = "suffix",
                  domain_separated: bool = False) -> IngestResult:
    """Ingest ``source`` chunk by chunk, rebuilding and anchoring once per chunk.

    With ``window`` set, the chunk size is recomputed once per window of that
    many entries and chunks never straddle a window boundary; otherwise it is
    recomputed before every chunk.  The final root is always anchored, even
    when ``anchor_every`` skips the last chunk.
    """
    if anchor_every < 1:
        raise ValueError("anchor_every must be >= 1")
    if window is not None and window < 1:
        raise ValueError("window must be >= 1")
    anchor = anchor if anchor is not None else AnchorStore()
    chunker = AdaptiveChunker(cfg, probe)
    builder = TreeBuilder(algo, domain_separated=domain_separated, mode=rebuild_mode)
    store = LogStore()
    stats = IngestStats()
    reader = _ChunkReader(source)
    h = algo.hasher()

    def commit(chunk: list[bytes], size: int) -> None:
        if domain_separated:
            builder.append(hash_leaves(chunk, algo, domain_separated=True))
        else:
            builder.append([h(e) for e in chunk])
        store.extend(chunk)
        root = builder.rebuild()
        stats.chunk_sizes.append(size)
        stats.chunk_entries.append(len(chunk))
        stats.max_rebuild_ops = max(stats.max_rebuild_ops, builder.last_rebuild_ops)
        if stats.batch_count % anchor_every == 0 or not reader.has_more:
            anchor.store(root, store.count, algo)
            stats.anchors_written += 1

    start = time.perf_counter()
    if window is None:
        while reader.has_more:
            size = chunker.next_size()
            chunk = reader.read(size)
            if not chunk:
                break
            commit(chunk, size)
    else:
        w = 0
        while reader.has_more:
            size = chunker.next_size()
            left = window
            batches = 0
            while left and reader.has_more:
                chunk = reader.read(size, max_entries=left)
                if not chunk:
                    break
                left -= len(chunk)
                batches += 1
                commit(chunk, size)
            if batches:
                stats.windows.append((w, size, batches))
            w += 1
    if store.count and stats.anchors_written and anchor.load_latest().entry_count != store.count:
        anchor.store(builder.root, store.count, algo)
        stats.anchors_written += 1
    stats.wall_time = time.perf_counter() - start
    stats.entries = store.count
    stats.rebuilds = builder.rebuilds
    stats.hash_ops = builder.hash_ops
    tree = builder.tree() if store.count else MerkleTree(((),), algo, domain_separated)
    return IngestResult(store, tree, stats)


@dataclass(frozen=True)
class Verdict:
    valid: bool
    recomputed_root: bytes
    trusted_root: bytes


def verify_with_root(entry: bytes, tree: MerkleTree, index: int, trusted_root: bytes) -> Verdict:
    """Hash ``entry``, walk its proof in ``tree`` and compare with ``trusted_root``."""
    leaf = hash_leaf(entry, tree.algorithm, domain_separated=tree.domain_separated)
    proof = generate_proof(tree, index)
    recomputed = recompute_root(leaf, proof, domain_separated=tree.domain_separated)
    return Verdict(recomputed == trusted_root, recomputed, trusted_root)


def verify_entry(store: LogStore, tree: MerkleTree, anchor: AnchorStore, index: int) -> Verdict:
    n = tree.leaf_count
    if not 0 <= index < n:
        raise IndexError(f"index {index} out of range; valid range is [0, {n})")
    if index >= store.count:
        raise IndexError(f"index {index} missing from store of {store.count} entries")
    trusted = anchor.latest_for_count(n).root
    return verify_with_root(store.entries[index], tree, index, trusted)


@dataclass
class BatchVerification:
    verdicts: list[Verdict | None]
    errors: dict[int, Exception]
    total_seconds: float

    @property
    def per_entry_seconds(self) -> float:
        return self.total_seconds / len(self.verdicts) if self.verdicts else 0.0


def verify_batch(store: LogStore, tree: MerkleTree, anchor: AnchorStore,
                 indices: Sequence[int]) -> BatchVerification:
    """Verify ``indices`` one after another; a failing index records its error
    at its batch position and the batch carries on."""
    verdicts: list[Verdict | None] = []
    errors: dict[int, Exception] = {}
    clock = time.perf_counter
    start = clock()
    for pos, i in enumerate(indices):
        try:
            verdicts.append(verify_entry(store, tree, anchor, i))
        except (IndexError, AnchorError) as exc:
            verdicts.append(None)
            errors[pos] = exc
    total = clock() - start if indices else 0.0
    return BatchVerification(verdicts, errors, total)


class Finding(str, Enum):
    CONSISTENT = "CONSISTENT"
    TRUNCATED = "TRUNCATED"
    GROWN = "GROWN"


def check_truncation(store: LogStore, anchor: AnchorStore) -> Finding:
    latest = anchor.load_latest()
    if store.count < latest.entry_count:
        return Finding.TRUNCATED
    if store.count > latest.entry_count:
        return Finding.GROWN
    return Finding.CONSISTENT
