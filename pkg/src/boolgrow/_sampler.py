"""Compiled random-formula sampler.

Every leaf of the complete depth-d, k-ary formula tree has a fixed address
(its index among the k^d leaves), and its draw is a pure hash of
``(seed, sample index, leaf address)``.  Subtrees whose value cannot change
the parent are skipped without disturbing any other leaf's draw, so the
result is independent of evaluation order and of how samples are split
across threads.

The connective is compiled into straight-line bitwise code once per truth
table; the tree walk keeps O(depth * k) state.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from numba import njit

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MASK64 = (1 << 64) - 1


@njit(nogil=True, cache=True)
def splitmix64(x):
    z = x + _GOLDEN
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


@njit(nogil=True, cache=True)
def sample_key(seed, sample):
    return splitmix64(seed ^ splitmix64(sample))


@njit(nogil=True, cache=True)
def leaf_draw(key, leaf, m):
    """Uniform index in [0, m) for one leaf (multiply-shift reduction)."""
    h = splitmix64(key + leaf * _GOLDEN)
    return ((h >> np.uint64(32)) * m) >> np.uint64(32)


def _mix_py(x: int) -> int:
    z = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def leaf_draw_py(seed: int, sample: int, leaf: int, m: int) -> int:
    """Pure-Python twin of ``leaf_draw(sample_key(seed, sample), leaf, m)``."""
    key = _mix_py((seed & _MASK64) ^ _mix_py(sample & _MASK64))
    h = _mix_py((key + leaf * 0x9E3779B97F4A7C15) & _MASK64)
    return ((h >> 32) * m) >> 32


def _shannon_expr(bits: int, k: int, ref: str, var: int = 0) -> str:
    """Bitwise expression for a table over children var..k-1; ``M`` is all-ones.

    ``ref`` formats a child index into an array access, e.g. ``"v[d, {}]"``.
    """
    size = 1 << (k - var)
    if bits == 0:
        return "Z"
    if bits == (1 << size) - 1:
        return "M"
    lo = hi = 0
    for r in range(size // 2):
        lo |= ((bits >> (2 * r)) & 1) << r
        hi |= ((bits >> (2 * r + 1)) & 1) << r
    if lo == hi:
        return _shannon_expr(lo, k, ref, var + 1)
    v = ref.format(var)
    h, l = _shannon_expr(hi, k, ref, var + 1), _shannon_expr(lo, k, ref, var + 1)
    pos = v if h == "M" else "Z" if h == "Z" else f"({v} & {h})"
    neg = f"(M ^ {v})" if l == "M" else "Z" if l == "Z" else f"((M ^ {v}) & {l})"
    return f"({pos} | {neg})"


def _pending_expr(bits: int, k: int, j: int):
    """Mask of positions still undecided after the first j children, or None if never settled."""
    terms = []
    for p in range(1 << j):
        outs = {(bits >> (p | (rest << j))) & 1 for rest in range(1 << (k - j))}
        if len(outs) > 1:
            lits = [f"v[d, {l}]" if (p >> l) & 1 else f"(M ^ v[d, {l}])" for l in range(j)]
            terms.append("(" + " & ".join(lits) + ")")
    if len(terms) == 1 << j:
        return None
    return " | ".join(terms) if terms else "Z"


def _flat_height(k: int) -> int:
    """Height of the bottom subtrees evaluated branch-free (at most 4096 leaves)."""
    h = 0
    while k ** (h + 1) <= 4096:
        h += 1
    return max(h, 1)


@lru_cache(maxsize=64)
def compile_kernel(bits: int, k: int):
    """Build ``(sample_one, sample_block)`` specialised to one connective.

    Bottom subtrees of height ``_flat_height(k)`` are evaluated without
    branching; above them a depth-first walk skips children that cannot
    change their parent.
    """
    lines = [
        "def combine(v, d, M):", "    Z = M ^ M", f"    return {_shannon_expr(bits, k, 'v[d, {}]')}",
        "def combine_flat(v, o, M):", "    Z = M ^ M", f"    return {_shannon_expr(bits, k, 'v[o + {}]')}",
        "def settled(v, d, j, M):", "    Z = M ^ M",
    ]
    for j in range(1, k):
        expr = _pending_expr(bits, k, j)
        if expr is not None:
            lines += [f"    if j == {j}:", f"        return ({expr}) == Z"]
    lines.append("    return j == %d" % k)
    scope: dict = {}
    exec("\n".join(lines), scope)
    combine = njit(nogil=True)(scope["combine"])
    combine_flat = njit(nogil=True)(scope["combine_flat"])
    settled = njit(nogil=True)(scope["settled"])
    hmax = _flat_height(k)

    @njit(nogil=True)
    def flat(key, node, height, support, m, mask, buf):
        width = k**height
        base = node * np.uint64(width)
        # hash pass kept separate from the gather so it vectorises
        for r in range(width):
            buf[r] = leaf_draw(key, base + np.uint64(r), m)
        for r in range(width):
            buf[r] = support[buf[r]]
        while width > 1:
            width //= k
            for j in range(width):
                buf[j] = combine_flat(buf, k * j, mask)
        return buf[0]

    @njit(nogil=True)
    def sample_one(seed, sample, depth, support, mask):
        m = np.uint64(support.shape[0])
        key = sample_key(seed, sample)
        height = min(depth, hmax)
        top = depth - height
        buf = np.empty(k**height, dtype=np.uint64)
        if top == 0:
            return flat(key, np.uint64(0), height, support, m, mask, buf)
        vals = np.zeros((top, k), dtype=np.uint64)
        pos = np.zeros(top, dtype=np.int64)
        node = np.zeros(top + 1, dtype=np.uint64)
        uk = np.uint64(k)
        d = 0
        while True:
            if d == top - 1:
                base = node[d] * uk
                for j in range(k):
                    vals[d, j] = flat(key, base + np.uint64(j), height, support, m, mask, buf)
                    if j + 1 < k and settled(vals, d, j + 1, mask):
                        for r in range(j + 1, k):
                            vals[d, r] = 0
                        break
                v = combine(vals, d, mask)
                while True:
                    if d == 0:
                        return v
                    d -= 1
                    vals[d, pos[d]] = v
                    pos[d] += 1
                    if pos[d] < k and not settled(vals, d, pos[d], mask):
                        break
                    for r in range(pos[d], k):
                        vals[d, r] = 0
                    v = combine(vals, d, mask)
            node[d + 1] = node[d] * uk + np.uint64(pos[d])
            d += 1
            pos[d] = 0

    @njit(nogil=True)
    def sample_block(out, start, seed, depth, support, mask):
        for i in range(out.shape[0]):
            out[i] = sample_one(seed, np.uint64(start + i), depth, support, mask)

    return sample_one, sample_block
