"""Truth-table representation of Boolean functions.

An n-adic function is stored as a Python int holding its 2^n-bit truth
table.  Bit ``a`` of the table is ``f(a)`` where the assignment ``a`` is
encoded as ``sum(x_j << (j - 1))``, i.e. ``x_1`` is the least significant
bit of the assignment index.  Python ints give cheap exact bitwise
algebra; vectorised kernels elsewhere use the same integers as numpy ids.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

MAX_ARITY = 24


def table_size(n: int) -> int:
    return 1 << n


def full_mask(n: int) -> int:
    return (1 << (1 << n)) - 1


def bits_from_bools(values) -> int:
    """Pack a 0/1 sequence (index 0 first) into an int."""
    arr = np.asarray(values, dtype=bool)
    packed = np.packbits(arr, bitorder="little")
    return int.from_bytes(packed.tobytes(), "little")


def bools_from_bits(bits: int, size: int) -> np.ndarray:
    nbytes = max(1, (size + 7) // 8)
    raw = np.frombuffer(bits.to_bytes(nbytes, "little"), dtype=np.uint8)
    return np.unpackbits(raw, bitorder="little")[:size].astype(bool)


@lru_cache(maxsize=None)
def _assignment_weights(n: int) -> np.ndarray:
    idx = np.arange(1 << n, dtype=np.int64)
    w = np.zeros(1 << n, dtype=np.int64)
    for j in range(n):
        w += (idx >> j) & 1
    w.setflags(write=False)
    return w


@lru_cache(maxsize=None)
def projection_bits(n: int, j: int) -> int:
    idx = np.arange(1 << n, dtype=np.int64)
    return bits_from_bools((idx >> (j - 1)) & 1)


@lru_cache(maxsize=None)
def weight_bits(n: int, lo: int, hi: Optional[int] = None) -> int:
    """Table true exactly on assignments with ``lo <= |x| <= hi``."""
    hi = lo if hi is None else hi
    w = _assignment_weights(n)
    return bits_from_bools((w >= lo) & (w <= hi))


@dataclass(frozen=True)
class TruthTable:
    n: int
    bits: int

    def __post_init__(self):
        if not 1 <= self.n <= MAX_ARITY:
            raise ValueError(f"arity {self.n} outside [1, {MAX_ARITY}]")
        if not 0 <= self.bits <= full_mask(self.n):
            raise ValueError("truth table has bits beyond 2^n entries")

    @property
    def size(self) -> int:
        return 1 << self.n

    def __call__(self, a: int) -> int:
        return (self.bits >> a) & 1

    def __invert__(self) -> "TruthTable":
        return TruthTable(self.n, self.bits ^ full_mask(self.n))

    def _check(self, other: "TruthTable") -> None:
        if other.n != self.n:
            raise ValueError(f"arity mismatch: {self.n} vs {other.n}")

    def __and__(self, other: "TruthTable") -> "TruthTable":
        self._check(other)
        return TruthTable(self.n, self.bits & other.bits)

    def __or__(self, other: "TruthTable") -> "TruthTable":
        self._check(other)
        return TruthTable(self.n, self.bits | other.bits)

    def __xor__(self, other: "TruthTable") -> "TruthTable":
        self._check(other)
        return TruthTable(self.n, self.bits ^ other.bits)

    def weight(self) -> int:
        return self.bits.bit_count()

    def to_array(self) -> np.ndarray:
        return bools_from_bits(self.bits, self.size)

    @classmethod
    def from_values(cls, n: int, values: Sequence[int]) -> "TruthTable":
        if len(values) != 1 << n:
            raise ValueError(f"expected {1 << n} values, got {len(values)}")
        return cls(n, bits_from_bools(values))

    @classmethod
    def from_callable(cls, n: int, fn) -> "TruthTable":
        """Tabulate ``fn(x_1, ..., x_n)`` over all assignments."""
        vals = [int(bool(fn(*[(a >> j) & 1 for j in range(n)]))) for a in range(1 << n)]
        return cls.from_values(n, vals)

    # Serialised form: nibble j (bits 4j..4j+3) is the j-th hex character.
    def to_hex(self) -> str:
        nchars = max(1, self.size // 4)
        return "".join("%x" % ((self.bits >> (4 * j)) & 0xF) for j in range(nchars))

    @classmethod
    def from_hex(cls, n: int, text: str) -> "TruthTable":
        nchars = max(1, (1 << n) // 4)
        if len(text) != nchars:
            raise ValueError(f"n={n} table needs {nchars} hex chars, got {len(text)}")
        bits = 0
        for j, ch in enumerate(text.lower()):
            bits |= int(ch, 16) << (4 * j)
        return cls(n, bits)

    def __repr__(self) -> str:
        return f"TruthTable(n={self.n}, hex={self.to_hex()!r})"


@dataclass(frozen=True)
class LinearFn:
    """Coefficient vector ``(c_0, c_1, ..., c_n)``; bit j of ``bits`` is c_j."""

    n: int
    bits: int

    def __post_init__(self):
        if not 0 <= self.bits < 1 << (self.n + 1):
            raise ValueError("coefficient vector longer than n+1")

    @property
    def coeffs(self) -> tuple:
        return tuple((self.bits >> j) & 1 for j in range(self.n + 1))

    def __str__(self) -> str:
        return "".join(str(c) for c in self.coeffs)

    @classmethod
    def parse(cls, text: str) -> "LinearFn":
        if not text or set(text) - {"0", "1"}:
            raise ValueError(f"bad coefficient string {text!r}")
        return cls(len(text) - 1, sum(int(c) << j for j, c in enumerate(text)))


@dataclass(frozen=True)
class PropertySet:
    monotone: bool
    balanced: bool
    linear: bool
    self_dual: bool
    bi_preserving: bool
    threshold_index: Optional[int]
    slice_level: Optional[int]
    depends_on_all: bool


def make_basis(n: int, kind: str, j: Optional[int] = None) -> TruthTable:
    """Members of A_0: ``proj``/``neg`` (need j) and ``const0``/``const1``."""
    if kind == "const0":
        return TruthTable(n, 0)
    if kind == "const1":
        return TruthTable(n, full_mask(n))
    if kind not in ("proj", "neg"):
        raise ValueError(f"unknown basis kind {kind!r}")
    if j is None or not 1 <= j <= n:
        raise ValueError(f"projection index {j} out of range 1..{n}")
    bits = projection_bits(n, j)
    if kind == "neg":
        bits ^= full_mask(n)
    return TruthTable(n, bits)


def projection(n: int, j: int) -> TruthTable:
    return make_basis(n, "proj", j)


def threshold(n: int, t: int) -> TruthTable:
    if not 0 <= t <= n + 1:
        raise ValueError(f"threshold index {t} outside [0, {n + 1}]")
    if t > n:
        return TruthTable(n, 0)
    return TruthTable(n, weight_bits(n, t, n))


def chi(n: int) -> TruthTable:
    if n % 2:
        raise ValueError("chi_n needs even n")
    return TruthTable(n, weight_bits(n, n // 2))


def upsilon(n: int) -> TruthTable:
    if n % 2:
        raise ValueError("upsilon_n needs even n")
    if n // 2 + 1 > n:
        return TruthTable(n, 0)
    return TruthTable(n, weight_bits(n, n // 2 + 1, n))


def eta(n: int) -> TruthTable:
    return TruthTable(n, 1 << ((1 << n) - 1))


def kappa(n: int) -> TruthTable:
    # OR of all variables, minus the AND of all variables
    return TruthTable(n, full_mask(n) & ~1 & ~eta(n).bits)


def special(n: int, kind: str, t: Optional[int] = None) -> TruthTable:
    if kind == "threshold":
        if t is None:
            raise ValueError("threshold needs t")
        return threshold(n, t)
    makers = {"chi": chi, "upsilon": upsilon, "eta": eta, "kappa": kappa}
    if kind not in makers:
        raise ValueError(f"unknown special function {kind!r}")
    return makers[kind](n)


def parity_inner(f: TruthTable, g: TruthTable) -> int:
    f._check(g)
    return (f.bits & g.bits).bit_count() & 1


def reverse_bits(bits: int, size: int) -> int:
    return int(format(bits, f"0{size}b")[::-1], 2)


def dual(f: TruthTable) -> TruthTable:
    # f^d(x) = not f(not x); complementing x reverses the table
    return TruthTable(f.n, reverse_bits(f.bits, f.size) ^ full_mask(f.n))


def self_dual_extend(f: TruthTable) -> TruthTable:
    """Map an n-adic f to the (n+1)-adic self-dual ``f x_{n+1} v f^d ~x_{n+1}``."""
    return TruthTable(f.n + 1, dual(f).bits | (f.bits << f.size))


def linear_to_tt(lin: LinearFn, n: Optional[int] = None) -> TruthTable:
    n = lin.n if n is None else n
    if n != lin.n:
        raise ValueError("coefficient vector length does not match n")
    bits = full_mask(n) if lin.bits & 1 else 0
    for j in range(1, n + 1):
        if (lin.bits >> j) & 1:
            bits ^= projection_bits(n, j)
    return TruthTable(n, bits)


def linear_coeffs(f: TruthTable) -> Optional[LinearFn]:
    c0 = f(0)
    bits = c0
    for j in range(1, f.n + 1):
        bits |= (f(1 << (j - 1)) ^ c0) << j
    lin = LinearFn(f.n, bits)
    return lin if linear_to_tt(lin) == f else None


def is_monotone(f: TruthTable) -> bool:
    for j in range(1, f.n + 1):
        pj = projection_bits(f.n, j)
        # f(a) <= f(a | e_j) for every a with x_j = 0
        if ((f.bits & ~pj) << (1 << (j - 1))) & ~f.bits:
            return False
    return True


def depends_on(f: TruthTable, j: int) -> bool:
    pj = projection_bits(f.n, j)
    return ((f.bits & ~pj) << (1 << (j - 1))) != (f.bits & pj)


def is_slice(f: TruthTable, m: int) -> bool:
    above = weight_bits(f.n, m + 1, f.n) if m < f.n else 0
    below = weight_bits(f.n, 0, m - 1) if m > 0 else 0
    return (f.bits & above) == above and not f.bits & below


def classify(f: TruthTable) -> PropertySet:
    n = f.n
    top = (1 << n) - 1
    threshold_index = next(
        (t for t in range(n + 2) if threshold(n, t).bits == f.bits), None
    )
    slice_level = next((m for m in range(n + 1) if is_slice(f, m)), None)
    return PropertySet(
        monotone=is_monotone(f),
        balanced=f.weight() == f.size // 2,
        linear=linear_coeffs(f) is not None,
        self_dual=dual(f) == f,
        bi_preserving=f(0) == 0 and f(top) == 1,
        threshold_index=threshold_index,
        slice_level=slice_level,
        depends_on_all=all(depends_on(f, j) for j in range(1, n + 1)),
    )


@lru_cache(maxsize=4096)
def _cofactors(table: int, k: int) -> tuple:
    """Split a k-adic table on x_1 into (x_1=0, x_1=1) tables of arity k-1."""
    lo = hi = 0
    for r in range(1 << (k - 1)):
        lo |= ((table >> (2 * r)) & 1) << r
        hi |= ((table >> (2 * r + 1)) & 1) << r
    return lo, hi


def compose_bits(table: int, k: int, args: Sequence, mask):
    """Evaluate a k-adic table on argument tables by Shannon expansion.

    ``args`` may be Python ints or broadcastable numpy integer arrays; the
    same bitwise code serves both.  ``mask`` is the all-ones table.
    """
    if k == 0:
        return mask if table & 1 else mask & 0
    lo, hi = _cofactors(table, k)
    g = args[0]
    if lo == hi:
        return compose_bits(lo, k - 1, args[1:], mask)
    c1 = compose_bits(hi, k - 1, args[1:], mask)
    c0 = compose_bits(lo, k - 1, args[1:], mask)
    return (g & c1) | ((g ^ mask) & c0)


def compose(alpha, args: Sequence[TruthTable]) -> TruthTable:
    """Pointwise ``alpha(g_1(a), ..., g_k(a))``; alpha is a Connective or TruthTable."""
    table = getattr(alpha, "table", alpha)
    if len(args) != table.n:
        raise ValueError(f"connective arity {table.n} but {len(args)} arguments")
    n = args[0].n
    if any(g.n != n for g in args):
        raise ValueError("arguments must share one arity")
    return TruthTable(n, compose_bits(table.bits, table.n, [g.bits for g in args], full_mask(n)))
