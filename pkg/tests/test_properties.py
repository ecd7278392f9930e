"""Property tests for the tree, proofs and chunked rebuilds."""
import hashlib
import math

from hypothesis import given, settings, strategies as st

from oracles import brute_force_sibling_count
from tamperlog.merkle import (
    HashAlgorithm,
    InclusionProof,
    Side,
    TreeBuilder,
    build_tree,
    deserialize_proof,
    generate_proof,
    hash_leaf,
    hash_leaves,
    recompute_root,
    serialize_proof,
)

entries = st.lists(st.binary(max_size=48), min_size=1, max_size=150)
algos = st.sampled_from(list(HashAlgorithm))


@st.composite
def entries_and_cuts(draw):
    es = draw(entries)
    cuts = draw(st.lists(st.integers(1, len(es)), max_size=12))
    return es, sorted(set(cuts) | {len(es)})


@given(entries_and_cuts(), algos, st.sampled_from(["suffix", "full"]))
def test_any_partition_gives_single_shot_tree(data, algo, mode):
    es, cuts = data
    leaves = hash_leaves(es, algo)
    builder = TreeBuilder(algo, mode=mode)
    lo = 0
    for hi in cuts:
        builder.append(leaves[lo:hi])
        builder.rebuild()
        lo = hi
    assert builder.tree() == build_tree(leaves, algo)
    assert builder.rebuilds == len(cuts)


@given(entries, algos)
def test_every_proof_verifies(es, algo):
    leaves = hash_leaves(es, algo)
    tree = build_tree(leaves, algo)
    bound = math.ceil(math.log2(len(es))) if len(es) > 1 else 0
    for i in range(len(es)):
        proof = generate_proof(tree, i)
        assert recompute_root(leaves[i], proof) == tree.root
        assert len(proof.siblings) <= bound


@settings(max_examples=60)
@given(st.integers(1, 600), st.data())
def test_sibling_count_matches_brute_force(n, data):
    i = data.draw(st.integers(0, n - 1))
    tree = build_tree([hashlib.sha256(bytes([k % 256, k // 256])).digest() for k in range(n)])
    assert len(generate_proof(tree, i).siblings) == brute_force_sibling_count(n, i)


@given(entries, st.data())
def test_single_bit_flip_changes_recomputed_root(es, data):
    i = data.draw(st.integers(0, len(es) - 1))
    tree = build_tree(hash_leaves(es))
    original = es[i] if es[i] else b"\x00"
    if not es[i]:
        # the empty entry has no bits; an inserted zero byte is the minimal change
        flipped = original
    else:
        bit = data.draw(st.integers(0, 8 * len(original) - 1))
        buf = bytearray(original)
        buf[bit // 8] ^= 1 << (bit % 8)
        flipped = bytes(buf)
    assert recompute_root(hash_leaf(flipped), generate_proof(tree, i)) != tree.root


@given(st.integers(2, 400))
def test_promoted_nodes_are_byte_identical(n):
    tree = build_tree([hashlib.sha256(k.to_bytes(2, "big")).digest() for k in range(n)])
    for below, above in zip(tree.levels, tree.levels[1:]):
        if len(below) % 2:
            assert above[-1] is below[-1] or above[-1] == below[-1]


@given(st.integers(1, 2**20), st.data(), algos)
def test_proof_serialization_round_trip(tree_size, data, algo):
    index = data.draw(st.integers(0, tree_size - 1))
    sibs = data.draw(st.lists(st.tuples(st.binary(min_size=32, max_size=32), st.sampled_from(Side)), max_size=21))
    proof = InclusionProof(index, tree_size, tuple(sibs), algo)
    blob = serialize_proof(proof)
    assert deserialize_proof(blob) == proof
    header = f"v1 {algo.value} {tree_size} {index} {len(sibs)}\n"
    assert blob.startswith(header.encode())
    assert len(blob) == len(header) + 67 * len(sibs)
