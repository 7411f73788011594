"""Walsh-Hadamard spectra of function distributions.

``Delta(w) = sum_g (-1)^<w,g> pi(g)`` where ``<w,g>`` is the parity of the
overlap of the two id bit-vectors: truth tables in the general domain,
coefficient vectors in the linear domain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .boolfn import TruthTable, chi, upsilon
from .connective import Connective, spectral_profile
from .process import BudgetExceeded, Distribution

SAVICKY_BUDGET = 10**7
_MAX_DIM = 1 << 21


def _popcount(a: np.ndarray) -> np.ndarray:
    return np.bitwise_count(np.asarray(a, dtype=np.uint64)).astype(np.int64)


def _signs(a: np.ndarray) -> np.ndarray:
    return 1.0 - 2.0 * (_popcount(a) & 1)


@dataclass(frozen=True, eq=False)
class Spectrum:
    domain: str
    n: int
    values: np.ndarray
    iteration: int = 0

    def __post_init__(self):
        if self.values.shape != (self.dim,):
            raise ValueError(f"spectrum length {self.values.shape} != {self.dim}")

    @property
    def dim(self) -> int:
        return 1 << (self.n + 1) if self.domain == "linear" else 1 << (1 << self.n)

    def __getitem__(self, w) -> float:
        return float(self.values[getattr(w, "bits", w)])

    def max_nonzero(self) -> float:
        """max over w != 0 of |Delta(w)|."""
        return float(np.max(np.abs(self.values[1:]))) if self.dim > 1 else 0.0

    def to_json(self) -> dict:
        stub = Distribution(self.domain, self.n, np.zeros(0, np.int64), np.zeros(0))
        return {
            "n": self.n,
            "domain": self.domain,
            "iteration": self.iteration,
            "entries": [{"fn": stub.key(w), "delta": float(v)} for w, v in enumerate(self.values)],
        }


def fwht(values: np.ndarray) -> np.ndarray:
    """Unnormalised Walsh-Hadamard butterfly; length must be a power of two."""
    out = np.array(values, dtype=float)
    size = out.size
    if size & (size - 1):
        raise ValueError("length must be a power of two")
    h = 1
    while h < size:
        blocks = out.reshape(-1, 2, h)
        x, y = blocks[:, 0, :].copy(), blocks[:, 1, :]
        blocks[:, 0, :] += y
        blocks[:, 1, :] = x - y
        h *= 2
    return out


def _check_dim(domain: str, n: int) -> None:
    dim = 1 << (n + 1) if domain == "linear" else 1 << (1 << n)
    if dim > _MAX_DIM or (domain == "general" and n > 4):
        raise BudgetExceeded("spectrum dimension", dim, 1 << 16 if domain == "general" else _MAX_DIM)


def transform(pi: Distribution) -> Spectrum:
    _check_dim(pi.domain, pi.n)
    return Spectrum(pi.domain, pi.n, fwht(pi.dense()), pi.iteration)


def inverse(spec: Spectrum) -> Distribution:
    _check_dim(spec.domain, spec.n)
    dense = fwht(spec.values) / spec.dim
    ids = np.flatnonzero(dense != 0)
    return Distribution(spec.domain, spec.n, ids.astype(np.int64), dense[ids], spec.iteration)


def naive_transform(pi: Distribution) -> Spectrum:
    """Quadratic reference transform (test oracle)."""
    w = np.arange(pi.space, dtype=np.int64)
    chars = _signs(w[:, None] & pi.ids[None, :])
    return Spectrum(pi.domain, pi.n, chars @ pi.probs, pi.iteration)


def linear_step(spec: Spectrum, c: int, k: int) -> Spectrum:
    """Delta'(w) = (-1)^(c * w_1) Delta(w)^k, w_1 the constant-coefficient bit."""
    if spec.domain != "linear":
        raise ValueError("linear_step needs a linear-domain spectrum")
    w = np.arange(spec.dim)
    sign = np.where((c & w & 1) == 1, -1.0, 1.0)
    return Spectrum("linear", spec.n, sign * spec.values**k, spec.iteration + 1)


def slice_spectrum(n: int, reading: str = "overlap") -> Spectrum:
    """Spectrum of the uniform distribution on the slice functions S_{n/2,n}.

    ``reading="overlap"`` zeroes Delta(f) whenever f meets chi_n; the
    alternative ``"parity"`` zeroes it only for an odd overlap.
    """
    if n % 2:
        raise ValueError("slice spectrum needs even n")
    if n > 4:
        raise BudgetExceeded("spectrum dimension", 1 << (1 << n), 1 << 16)
    f = np.arange(1 << (1 << n), dtype=np.int64)
    meet = f & chi(n).bits
    if reading == "overlap":
        zero = meet != 0
    elif reading == "parity":
        zero = (_popcount(meet) & 1) == 1
    else:
        raise ValueError(f"unknown reading {reading!r}")
    values = np.where(zero, 0.0, _signs(f & upsilon(n).bits))
    return Spectrum("general", n, values)


def restriction_residual(spec: Spectrum, low: TruthTable, high: TruthTable) -> float:
    """max_w |Delta(w) - (-1)^<high,w> Delta(w & low)|."""
    if spec.domain != "general" or low.n != spec.n or high.n != spec.n:
        raise ValueError("restriction pair must match the spectrum's arity")
    w = np.arange(spec.dim, dtype=np.int64)
    predicted = _signs(w & high.bits) * spec.values[w & low.bits]
    return float(np.max(np.abs(spec.values - predicted)))


def _positions(w: int) -> list:
    return [x for x in range(w.bit_length()) if (w >> x) & 1]


def _subsets(w: int) -> np.ndarray:
    pos = _positions(w)
    out = np.zeros(1 << len(pos), dtype=np.int64)
    for j, x in enumerate(pos):
        out[1 << j:1 << (j + 1)] = out[: 1 << j] | (1 << x)
    return out


def savicky_terms(delta: Spectrum, alpha: Connective, w: TruthTable):
    """Split Delta'(w) into (a_j(w) for j = 0..k, y(w)).

    Delta'(w) = sum_j a_j(w) Delta(w)^j + y(w).  The y-term runs over every
    k-tuple of sub-functions of w except those made only of 0 and w.
    """
    if delta.domain != "general" or w.n != delta.n:
        raise ValueError("savicky recurrence needs a general-domain spectrum of matching arity")
    k, d = alpha.k, w.weight()
    need = (1 << d) ** k
    if need > SAVICKY_BUDGET:
        raise BudgetExceeded("savicky tuple sum", need, SAVICKY_BUDGET)
    S = spectral_profile(alpha).S
    a = spectral_profile(alpha).a_weight(d)
    if d == 0:
        return a, 0.0
    subs = _subsets(w.bits)
    grid = np.indices((subs.size,) * k).reshape(k, -1)
    v = subs[grid]  # (k, tuples)
    coeff = np.ones(v.shape[1])
    for x in _positions(w.bits):
        t = np.zeros(v.shape[1], dtype=np.int64)
        for j in range(k):
            t |= ((v[j] >> x) & 1) << j
        coeff *= S[t]
    prod = np.prod(delta.values[v], axis=0)
    pure = np.all((v == 0) | (v == w.bits), axis=0)
    return a, float(np.sum(coeff[~pure] * prod[~pure]))


def savicky_predict(pi: Distribution, alpha: Connective, w: TruthTable) -> float:
    """Right-hand side of the Fourier recurrence for Delta_{i+1}(w)."""
    if w.bits == 0:
        return 1.0
    delta = transform(pi)
    a, y = savicky_terms(delta, alpha, w)
    x = delta[w]
    return float(sum(a[j] * x**j for j in range(alpha.k + 1)) + y)


@dataclass(frozen=True)
class BoundConstants:
    k: int
    n: int
    a: float

    @property
    def log_inv_a(self) -> float:
        return math.log2(1.0 / self.a)

    def i_d(self, d: int) -> float:
        base = self.n * 2**self.k * self.log_inv_a
        try:
            return base + sum((self.k + 1) ** j * j for j in range(3, d + 1)) / self.log_inv_a
        except OverflowError:
            return math.inf

    @property
    def I(self) -> float:
        try:
            tail = 2 ** (2 * self.n) * (self.k + 1) ** (2**self.n) / self.log_inv_a
        except OverflowError:
            return math.inf
        return self.n * 2**self.k * self.log_inv_a + tail

    def b_d(self, i: float, d: int) -> float:
        if d <= 2:
            return 1.0
        return (i - self.i_d(2) + 2) ** ((self.k + 1) ** (d - 3))

    def envelope(self, i: float, d: int) -> float:
        """a^(i - i_d) b_d(i), the bound on |Delta_i(w)| for |w| = d >= 2."""
        if d < 2:
            raise ValueError("envelope defined for |w| >= 2")
        base = i - self.i_d(2) + 2
        if d > 2 and base <= 0:
            return math.inf
        log_env = (i - self.i_d(d)) * math.log2(self.a)
        if d > 2:
            log_env += (self.k + 1) ** (d - 3) * math.log2(base)
        return 2.0**log_env if log_env < 1000 else math.inf

    def savbounds_gap(self, i: float, c: float) -> float:
        """i minus the right-hand side of the savbounds inequality (>= 0 means it holds)."""
        if i - self.I + 2 <= 0:
            return -math.inf
        rhs = (math.log2(c) / math.log2(self.a)
               + math.log2(i - self.I + 2) / self.log_inv_a * (self.k + 1) ** (2**self.n)
               + self.I)
        return i - rhs

    def solve_savbounds(self, c: float) -> int:
        """Smallest integer i >= I satisfying the savbounds inequality.

        The gap is convex in i and negative at I, so its sign changes once:
        gallop to a bracket, then bisect.
        """
        if not 0 < c < 1:
            raise ValueError("c must lie in (0, 1)")
        if not math.isfinite(self.I):
            raise OverflowError(f"savbounds threshold I overflows a double at n={self.n}")
        lo = math.ceil(self.I)
        if self.savbounds_gap(lo, c) >= 0:
            return lo
        step = 1
        hi = lo + step
        while self.savbounds_gap(hi, c) < 0:
            lo, step = hi, step * 2
            hi = lo + step
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if self.savbounds_gap(mid, c) >= 0:
                hi = mid
            else:
                lo = mid
        return hi

    def to_json(self, c: Optional[float] = None) -> dict:
        out = {
            "k": self.k,
            "n": self.n,
            "a": self.a,
            "i_d": {str(d): self.i_d(d) for d in range(2, 2**self.n + 1)},
            "I": self.I,
        }
        if c is not None:
            out["savbounds_c"] = c
            out["savbounds_i"] = self.solve_savbounds(c) if math.isfinite(self.I) else None
        return out


def bound_constants(alpha: Connective, n: int) -> BoundConstants:
    prof = spectral_profile(alpha)
    if not prof.balanced_nonlinear():
        raise ValueError(f"connective is not balanced nonlinear (a = {prof.a3:.6g})")
    return BoundConstants(alpha.k, n, prof.a3)
