"""Merkle tree construction, inclusion proofs and root recomputation.

Odd-width levels promote their last node to the next level unchanged (no
hashing, no duplication).  Leaves are hashed as raw bytes by default; the
optional ``domain_separated`` mode prefixes 0x00 to leaf pre-images and 0x01 to
internal pre-images.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Sequence

DIGEST_SIZE = 32

LEAF_PREFIX = b"\x00"
NODE_PREFIX = b"\x01"


class HashAlgorithm(str, Enum):
    SHA256 = "sha256"
    BLAKE2B = "blake2b"

    @classmethod
    def parse(cls, name: "str | HashAlgorithm") -> "HashAlgorithm":
        if isinstance(name, HashAlgorithm):
            return name
        key = name.strip().lower().replace("-", "")
        aliases = {"sha256": cls.SHA256, "blake2b": cls.BLAKE2B, "blake2b256": cls.BLAKE2B}
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown hash algorithm {name!r}; expected sha256 or blake2b") from None

    def hasher(self) -> Callable[[bytes], bytes]:
        """Return a one-shot ``bytes -> 32-byte digest`` callable."""
        if self is HashAlgorithm.SHA256:
            sha256 = hashlib.sha256
            return lambda data: sha256(data).digest()
        blake2b = hashlib.blake2b
        return lambda data: blake2b(data, digest_size=DIGEST_SIZE).digest()


class Side(str, Enum):
    """Which side of the running hash a proof sibling sits on."""

    LEFT = "L"
    RIGHT = "R"


class EmptyTreeError(ValueError):
    """Raised when a root is requested from a tree with no leaves."""


def hash_leaf(entry_bytes: bytes, algo: HashAlgorithm = HashAlgorithm.SHA256,
              *, domain_separated: bool = False) -> bytes:
    if domain_separated:
        entry_bytes = LEAF_PREFIX + entry_bytes
    return algo.hasher()(entry_bytes)


def hash_internal(left: bytes, right: bytes, algo: HashAlgorithm = HashAlgorithm.SHA256,
                  *, domain_separated: bool = False) -> bytes:
    prefix = NODE_PREFIX if domain_separated else b""
    return algo.hasher()(prefix + left + right)


def hash_leaves(entries: Sequence[bytes], algo: HashAlgorithm = HashAlgorithm.SHA256,
                *, domain_separated: bool = False) -> list[bytes]:
    h = algo.hasher()
    if domain_separated:
        return [h(LEAF_PREFIX + e) for e in entries]
    return [h(e) for e in entries]


def _parent_level(level: Sequence[bytes], start: int, h: Callable[[bytes], bytes],
                  prefix: bytes) -> list[bytes]:
    """Parents of ``level`` from parent index ``start`` onwards."""
    width = len(level)
    lo = 2 * start
    paired_end = width - (width & 1)
    if prefix:
        out = [h(prefix + level[i] + level[i + 1]) for i in range(lo, paired_end, 2)]
    else:
        out = [h(a + b) for a, b in zip(level[lo:paired_end:2], level[lo + 1:paired_end:2])]
    if width & 1 and lo <= width - 1:
        out.append(level[-1])  # promoted
    return out


def _build_levels(leaves: Sequence[bytes], algo: HashAlgorithm,
                  domain_separated: bool) -> tuple[list[list[bytes]], int]:
    h = algo.hasher()
    prefix = NODE_PREFIX if domain_separated else b""
    levels = [list(leaves)]
    ops = 0
    while len(levels[-1]) > 1:
        below = levels[-1]
        levels.append(_parent_level(below, 0, h, prefix))
        ops += len(below) // 2
    return levels, ops


@dataclass(frozen=True, eq=False)
class MerkleTree:
    """Immutable level-indexed tree; ``levels[0]`` holds the leaf digests."""

    levels: tuple[tuple[bytes, ...], ...]
    algorithm: HashAlgorithm = HashAlgorithm.SHA256
    domain_separated: bool = False

    @property
    def leaf_count(self) -> int:
        return len(self.levels[0]) if self.levels else 0

    @property
    def depth(self) -> int:
        """Number of node levels, leaves and root included (0 when empty)."""
        return len(self.levels) if self.leaf_count else 0

    @property
    def root(self) -> bytes:
        if not self.leaf_count:
            raise EmptyTreeError("empty tree has no root: nothing has been committed")
        return self.levels[-1][0]

    @property
    def digest_count(self) -> int:
        return sum(len(level) for level in self.levels)

    def leaf(self, index: int) -> bytes:
        return self.levels[0][index]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MerkleTree):
            return NotImplemented
        return (self.algorithm == other.algorithm
                and self.domain_separated == other.domain_separated
                and self.levels == other.levels)

    def __hash__(self) -> int:
        return hash((self.algorithm, self.leaf_count, self.levels[-1] if self.levels else ()))


def build_tree(leaves: Sequence[bytes], algo: HashAlgorithm = HashAlgorithm.SHA256,
               *, domain_separated: bool = False) -> MerkleTree:
    """Build a tree over leaf digests.  An empty input gives a rootless tree."""
    if not leaves:
        return MerkleTree(levels=((),), algorithm=algo, domain_separated=domain_separated)
    levels, _ = _build_levels(leaves, algo, domain_separated)
    return MerkleTree(tuple(tuple(level) for level in levels), algo, domain_separated)


def root(tree: MerkleTree) -> bytes:
    return tree.root


class TreeBuilder:
    """Mutable leaf accumulator that rebuilds its tree once per batch.

    ``append`` only stages leaves.  ``rebuild`` brings every level up to date.
    In the default ``"suffix"`` mode it recomputes only nodes whose subtree
    touches a staged leaf or a previously promoted node, which yields the
    same levels as a full build.  ``"full"`` recomputes every level from
    scratch.  ``rebuilds`` and ``hash_ops`` are instrumentation counters.
    """

    def __init__(self, algo: HashAlgorithm = HashAlgorithm.SHA256, *,
                 domain_separated: bool = False, mode: str = "suffix") -> None:
        if mode not in ("suffix", "full"):
            raise ValueError(f"rebuild mode must be 'suffix' or 'full', got {mode!r}")
        self.algorithm = algo
        self.domain_separated = domain_separated
        self.mode = mode
        self._levels: list[list[bytes]] = [[]]
        self._clean = 0  # leaves already reflected in the upper levels
        self.rebuilds = 0
        self.hash_ops = 0
        self.last_rebuild_ops = 0

    @property
    def leaf_count(self) -> int:
        return len(self._levels[0])

    def append(self, digests: Sequence[bytes]) -> None:
        self._levels[0].extend(digests)

    def rebuild(self) -> bytes:
        """Bring the tree up to date and return the new root."""
        leaves = self._levels[0]
        if not leaves:
            raise EmptyTreeError("empty tree has no root: nothing has been committed")
        if self.mode == "full":
            self._levels, ops = _build_levels(leaves, self.algorithm, self.domain_separated)
            self._levels[0] = leaves
        else:
            ops = self._rebuild_suffix()
        self._clean = len(leaves)
        self.rebuilds += 1
        self.hash_ops += ops
        self.last_rebuild_ops = ops
        return self._levels[-1][0]

    def _rebuild_suffix(self) -> int:
        h = self.algorithm.hasher()
        prefix = NODE_PREFIX if self.domain_separated else b""
        levels = self._levels
        dirty = self._clean
        ops = 0
        k = 0
        while len(levels[k]) > 1:
            below = levels[k]
            # parents from dirty // 2 on see a changed child, or an old
            # promoted tail that may now have a partner
            start = dirty // 2
            if k + 1 == len(levels):
                levels.append([])
            above = levels[k + 1]
            del above[start:]
            fresh = _parent_level(below, start, h, prefix)
            ops += len(below) // 2 - start
            above.extend(fresh)
            dirty = start
            k += 1
        del levels[k + 1:]
        return ops

    @property
    def root(self) -> bytes:
        if not self.leaf_count or self._clean != self.leaf_count:
            raise EmptyTreeError("tree has no committed root; call rebuild() first")
        return self._levels[-1][0]

    def tree(self) -> MerkleTree:
        """Snapshot of the current levels (requires an up-to-date rebuild)."""
        if self._clean != self.leaf_count:
            raise ValueError("staged leaves pending; call rebuild() before snapshotting")
        return MerkleTree(tuple(tuple(level) for level in self._levels),
                          self.algorithm, self.domain_separated)


@dataclass(frozen=True)
class InclusionProof:
    leaf_index: int
    tree_size: int
    siblings: tuple[tuple[bytes, Side], ...] = field(default=())
    algorithm: HashAlgorithm = HashAlgorithm.SHA256

    def __len__(self) -> int:
        return len(self.siblings)


def generate_proof(tree: MerkleTree, index: int) -> InclusionProof:
    n = tree.leaf_count
    if not 0 <= index < n:
        raise IndexError(f"leaf index {index} out of range; valid range is [0, {n})")
    siblings: list[tuple[bytes, Side]] = []
    i = index
    for level in tree.levels[:-1]:
        partner = i ^ 1
        if partner < len(level):
            siblings.append((level[partner], Side.LEFT if i & 1 else Side.RIGHT))
        i >>= 1
    return InclusionProof(index, n, tuple(siblings), tree.algorithm)


def recompute_root(leaf_digest: bytes, proof: InclusionProof, *,
                   domain_separated: bool = False) -> bytes:
    h = proof.algorithm.hasher()
    prefix = NODE_PREFIX if domain_separated else b""
    current = leaf_digest
    for sibling, side in proof.siblings:
        if side is Side.LEFT:
            current = h(prefix + sibling + current)
        else:
            current = h(prefix + current + sibling)
    return current


class ProofDecodeError(ValueError):
    def __init__(self, field_name: str, detail: str) -> None:
        super().__init__(f"malformed proof: bad {field_name}: {detail}")
        self.field = field_name


PROOF_VERSION = "v1"


def serialize_proof(proof: InclusionProof) -> bytes:
    lines = [f"{PROOF_VERSION} {proof.algorithm.value} {proof.tree_size} "
             f"{proof.leaf_index} {len(proof.siblings)}"]
    lines.extend(f"{side.value} {digest.hex()}" for digest, side in proof.siblings)
    return ("\n".join(lines) + "\n").encode("ascii")


def _parse_int(field_name: str, token: str, minimum: int) -> int:
    if not token.isdigit():
        raise ProofDecodeError(field_name, f"expected a non-negative integer, got {token!r}")
    value = int(token)
    if value < minimum:
        raise ProofDecodeError(field_name, f"must be >= {minimum}, got {value}")
    return value


def deserialize_proof(data: bytes) -> InclusionProof:
    try:
        text = data.decode("ascii")
    except UnicodeDecodeError as exc:
        raise ProofDecodeError("encoding", "proof text must be ASCII") from exc
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise ProofDecodeError("header", "empty input")
    header = lines[0].split(" ")
    if len(header) != 5:
        raise ProofDecodeError("header", f"expected 5 fields, got {len(header)}")
    version, algo_name, size_tok, index_tok, count_tok = header
    if version != PROOF_VERSION:
        raise ProofDecodeError("version", f"unsupported {version!r}")
    try:
        algo = HashAlgorithm(algo_name)
    except ValueError:
        raise ProofDecodeError("algorithm", f"unknown {algo_name!r}") from None
    tree_size = _parse_int("tree_size", size_tok, 1)
    leaf_index = _parse_int("leaf_index", index_tok, 0)
    if leaf_index >= tree_size:
        raise ProofDecodeError("leaf_index", f"{leaf_index} not below tree_size {tree_size}")
    count = _parse_int("sibling_count", count_tok, 0)
    body = lines[1:]
    if len(body) != count:
        raise ProofDecodeError("sibling_count", f"header says {count}, found {len(body)} lines")
    siblings = []
    for lineno, line in enumerate(body, start=1):
        parts = line.split(" ")
        if len(parts) != 2:
            raise ProofDecodeError(f"sibling[{lineno - 1}]", f"expected '<L|R> <hex>', got {line!r}")
        side_tok, hex_tok = parts
        try:
            side = Side(side_tok)
        except ValueError:
            raise ProofDecodeError(f"sibling[{lineno - 1}].side", f"expected L or R, got {side_tok!r}") from None
        if len(hex_tok) != 2 * DIGEST_SIZE or hex_tok != hex_tok.lower():
            raise ProofDecodeError(f"sibling[{lineno - 1}].digest", "expected 64 lowercase hex chars")
        try:
            digest = bytes.fromhex(hex_tok)
        except ValueError:
            raise ProofDecodeError(f"sibling[{lineno - 1}].digest", "not valid hex") from None
        siblings.append((digest, side))
    return InclusionProof(leaf_index, tree_size, tuple(siblings), algo)
