"""Independent reference computations used as test oracles.

None of these touch the level arrays or proof walker in ``tamperlog.merkle``.
"""
from __future__ import annotations

import hashlib


def range_levels(n: int) -> list[list[tuple[int, int]]]:
    """Node levels as half-open leaf ranges, pairing left to right and
    carrying an odd tail node up unchanged."""
    levels = [[(i, i + 1) for i in range(n)]]
    while len(levels[-1]) > 1:
        cur = levels[-1]
        nxt = []
        for j in range(0, len(cur), 2):
            if j + 1 < len(cur):
                nxt.append((cur[j][0], cur[j + 1][1]))
            else:
                nxt.append(cur[j])
        levels.append(nxt)
    return levels


def brute_force_sibling_count(n: int, index: int) -> int:
    """Walk the range levels: a level contributes a sibling whenever the node
    covering ``index`` grows when moving up."""
    levels = range_levels(n)
    count = 0
    for below, above in zip(levels, levels[1:]):
        node = next(r for r in below if r[0] <= index < r[1])
        parent = next(r for r in above if r[0] <= index < r[1])
        if parent != node:
            count += 1
    return count


def reference_root(leaves: list[bytes]) -> bytes:
    """Root by recursion on leaf ranges, hashing with hashlib directly."""
    levels = range_levels(len(leaves))
    top = levels[-1][0]

    def node(rng: tuple[int, int], depth: int) -> bytes:
        if depth == 0:
            return leaves[rng[0]]
        below = levels[depth - 1]
        children = [r for r in below if rng[0] <= r[0] and r[1] <= rng[1]]
        if len(children) == 1:
            return node(children[0], depth - 1)
        left, right = children
        return hashlib.sha256(node(left, depth - 1) + node(right, depth - 1)).digest()

    return node(top, len(levels) - 1)
