"""Connectives and their amplification polynomials.

For a k-adic connective the amplification polynomial is
``A(p) = sum_i beta_i C(k, i) p^i (1-p)^(k-i)`` with ``beta_i`` the fraction
of weight-i assignments mapped to 1.  Everything here is exact where it can
be (rational beta) and double precision where it cannot (roots, derivatives).
"""

from __future__ import annotations

import enum
import json
import warnings
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from math import comb
from typing import Callable, Optional

import numpy as np

from .boolfn import (
    PropertySet,
    TruthTable,
    _assignment_weights,
    classify,
    dual,
)


@dataclass(frozen=True)
class Connective:
    table: TruthTable
    name: Optional[str] = None

    @property
    def k(self) -> int:
        return self.table.n

    @cached_property
    def props(self) -> PropertySet:
        return classify(self.table)

    def __call__(self, *xs: int) -> int:
        return self.table(sum(int(x) << j for j, x in enumerate(xs)))

    @classmethod
    def from_callable(cls, k: int, fn: Callable, name: Optional[str] = None) -> "Connective":
        return cls(TruthTable.from_callable(k, fn), name)

    @classmethod
    def linear(cls, k: int, c: int = 0) -> "Connective":
        tag = f"xor{k}" if not c else f"xnor{k}"
        return cls.from_callable(k, lambda *x: (c + sum(x)) % 2, tag)

    def dual(self) -> "Connective":
        return Connective(dual(self.table), f"dual({self.name})" if self.name else None)

    def to_json(self) -> dict:
        out = {"arity": self.k, "truth_table": self.table.to_hex()}
        if self.name:
            out["name"] = self.name
        return out

    @classmethod
    def from_json(cls, data) -> "Connective":
        if isinstance(data, str):
            data = json.loads(data)
        try:
            k = int(data["arity"])
            table = TruthTable.from_hex(k, str(data["truth_table"]))
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed connective JSON: {exc}") from exc
        return cls(table, data.get("name"))


def _maj(*x):
    return int(2 * sum(x) > len(x))


PRESETS: dict[str, Callable[[], Connective]] = {
    "and2": lambda: Connective.from_callable(2, lambda a, b: a & b, "and2"),
    "or2": lambda: Connective.from_callable(2, lambda a, b: a | b, "or2"),
    "and3": lambda: Connective.from_callable(3, lambda a, b, c: a & b & c, "and3"),
    "or3": lambda: Connective.from_callable(3, lambda a, b, c: a | b | c, "or3"),
    "xor2": lambda: Connective.linear(2, 0),
    "xor3": lambda: Connective.linear(3, 0),
    "xnor3": lambda: Connective.linear(3, 1),
    "maj3": lambda: Connective.from_callable(3, _maj, "maj3"),
    "maj5": lambda: Connective.from_callable(5, _maj, "maj5"),
    # selector x picks y or z
    "mux": lambda: Connective.from_callable(3, lambda x, y, z: (x & y) | ((1 - x) & z), "mux"),
    "valiant4": lambda: Connective.from_callable(4, lambda a, b, c, d: (a & b) | (c & d), "valiant4"),
    "slow3": lambda: Connective.from_callable(3, lambda a, b, c: (a & b) | (a & c), "slow3"),
}


def preset(name: str) -> Connective:
    try:
        return PRESETS[name.lower()]()
    except KeyError:
        raise ValueError(f"unknown connective preset {name!r}; known: {sorted(PRESETS)}") from None


@dataclass(frozen=True)
class CharPoly:
    """beta_i = counts[i] / C(k, i), kept as integer counts."""

    k: int
    counts: tuple

    @property
    def beta(self) -> tuple:
        return tuple(Fraction(c, comb(self.k, i)) for i, c in enumerate(self.counts))

    @property
    def beta_float(self) -> np.ndarray:
        return np.array([c / comb(self.k, i) for i, c in enumerate(self.counts)])

    def exact(self, p: Fraction) -> Fraction:
        p = Fraction(p)
        return sum(
            (Fraction(c) * p**i * (1 - p) ** (self.k - i) for i, c in enumerate(self.counts)),
            Fraction(0),
        )

    def is_identity(self) -> bool:
        # A(p) = p exactly iff beta_i = i/k for all i
        return all(b == Fraction(i, self.k) for i, b in enumerate(self.beta))

    def to_json(self) -> dict:
        return {
            "k": self.k,
            "beta": [str(b) for b in self.beta],
            "beta_float": [float(b) for b in self.beta],
        }


def char_poly(alpha) -> CharPoly:
    table = getattr(alpha, "table", alpha)
    k = table.n
    weights = _assignment_weights(k)
    values = table.to_array()
    counts = np.bincount(weights[values], minlength=k + 1)
    return CharPoly(k, tuple(int(c) for c in counts))


def _bernstein(coeffs: np.ndarray, p):
    m = len(coeffs) - 1
    p = np.asarray(p, dtype=float)
    total = np.zeros_like(p)
    for i, b in enumerate(coeffs):
        if b:
            total = total + b * comb(m, i) * p**i * (1 - p) ** (m - i)
    return total


def evaluate(A: CharPoly, p, order: int = 0):
    """A(p) for order 0, A'(p) for order 1; p may be a scalar or array."""
    arr = np.asarray(p, dtype=float)
    if np.any((arr < 0) | (arr > 1)) or np.any(np.isnan(arr)):
        raise ValueError("p must lie in [0, 1]")
    beta = A.beta_float
    if order == 0:
        out = _bernstein(beta, arr)
    elif order == 1:
        if A.k == 0:
            out = np.zeros_like(arr)
        else:
            out = A.k * _bernstein(np.diff(beta), arr)
    else:
        raise ValueError("order must be 0 or 1")
    return float(out) if out.ndim == 0 else out


class FixedPointKind(str, enum.Enum):
    ABOVE = "above_everywhere"
    BELOW = "below_everywhere"
    INTERIOR = "interior"
    IDENTITY = "identity"


@dataclass(frozen=True)
class FixedPointReport:
    kind: FixedPointKind
    s: Optional[float] = None
    residual: Optional[float] = None

    def to_json(self) -> dict:
        return {"kind": self.kind.value, "s": self.s, "residual": self.residual}


GRID_POINTS = 4096


def fixed_point(A: CharPoly, tol: float = 1e-12) -> FixedPointReport:
    """Locate where A(p) crosses p on (0, 1).

    A sign scan on an interior grid brackets the first crossing; bisection
    then narrows it until ``|A(s) - s| <= tol`` or the bracket collapses.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if A.is_identity():
        return FixedPointReport(FixedPointKind.IDENTITY)
    grid = np.arange(1, GRID_POINTS + 1) / (GRID_POINTS + 1)
    gap = evaluate(A, grid) - grid
    if np.all(gap > 0):
        return FixedPointReport(FixedPointKind.ABOVE)
    if np.all(gap < 0):
        return FixedPointReport(FixedPointKind.BELOW)

    exact = np.flatnonzero(gap == 0)
    changes = np.flatnonzero(np.sign(gap[:-1]) * np.sign(gap[1:]) < 0)
    if exact.size and (not changes.size or exact[0] <= changes[0]):
        s = float(grid[exact[0]])
        return FixedPointReport(FixedPointKind.INTERIOR, s, 0.0)
    if not changes.size:
        # touches p without crossing; report the closest grid point
        j = int(np.argmin(np.abs(gap)))
        return FixedPointReport(FixedPointKind.INTERIOR, float(grid[j]), float(abs(gap[j])))
    lo, hi = float(grid[changes[0]]), float(grid[changes[0] + 1])
    glo = gap[changes[0]]
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        gm = evaluate(A, mid) - mid
        if abs(gm) <= tol and hi - lo < 1e-15:
            break
        if gm == 0:
            lo = hi = mid
            break
        if (gm > 0) == (glo > 0):
            lo, glo = mid, gm
        else:
            hi = mid
        if hi - lo <= 4e-16:
            break
    s = 0.5 * (lo + hi)
    return FixedPointReport(FixedPointKind.INTERIOR, s, abs(evaluate(A, s) - s))


class ConvergenceClass(str, enum.Enum):
    FAST = "fast"
    SLOW = "slow"
    NOT_APPLICABLE = "not_applicable"


@dataclass(frozen=True)
class FastHypotheses:
    """The two readings of the fast-convergence hypothesis, on the down-directed side."""

    beta_k_minus_1: Fraction
    beta_k_minus_2: Optional[Fraction]
    lemma_reading: bool
    theorem_reading: Optional[bool]

    @property
    def disagree(self) -> bool:
        return self.theorem_reading is not None and self.theorem_reading != self.lemma_reading


def _down_directed(alpha: Connective) -> Optional[Connective]:
    """alpha itself if A(p) < p on (0,1), its dual if A(p) > p, else None."""
    if not alpha.props.monotone:
        return None
    report = fixed_point(char_poly(alpha))
    if report.kind is FixedPointKind.BELOW:
        return alpha
    if report.kind is FixedPointKind.ABOVE:
        return alpha.dual()
    return None


def fast_hypotheses(alpha: Connective) -> Optional[FastHypotheses]:
    down = _down_directed(alpha)
    if down is None:
        return None
    k = down.k
    beta = char_poly(down).beta
    bkm1 = beta[k - 1]
    bkm2 = beta[k - 2] if k >= 2 else None
    return FastHypotheses(
        beta_k_minus_1=bkm1,
        beta_k_minus_2=bkm2,
        lemma_reading=bkm1 <= Fraction(k - 2, k),
        theorem_reading=None if bkm2 is None else bkm2 <= Fraction(k - 2, k),
    )


def convergence_class(alpha: Connective) -> ConvergenceClass:
    """Fast/slow dichotomy for monotone connectives without an interior fixed point.

    Decided by beta_{k-1} of the down-directed connective (the dual is used
    when A(p) > p).  A warning is raised when the beta_{k-2} reading of the
    hypothesis would classify differently.
    """
    hyp = fast_hypotheses(alpha)
    if hyp is None:
        return ConvergenceClass.NOT_APPLICABLE
    k = alpha.k
    if hyp.disagree:
        warnings.warn(
            f"{alpha.name or alpha.table}: beta_(k-1) and beta_(k-2) readings of the "
            "fast-convergence hypothesis disagree; using beta_(k-1)",
            stacklevel=2,
        )
    if hyp.beta_k_minus_1 == Fraction(k - 1, k):
        return ConvergenceClass.SLOW
    if hyp.lemma_reading:
        return ConvergenceClass.FAST
    return ConvergenceClass.NOT_APPLICABLE


@dataclass(frozen=True)
class SpectralProfile:
    k: int
    S: np.ndarray

    @property
    def a3(self) -> float:
        return float(np.sum(np.abs(self.S) ** 3))

    def a_weight(self, d: int) -> np.ndarray:
        """Entries j = 0..k: sum over |t| = j of S(t)^d (entry 0 is S(0)^d)."""
        weights = _assignment_weights(self.k)
        return np.bincount(weights, weights=self.S**d, minlength=self.k + 1)

    def balanced_nonlinear(self, tol: float = 1e-12) -> bool:
        return abs(self.S[0]) <= tol and float(np.max(np.abs(self.S))) < 1 - tol


def spectral_profile(alpha) -> SpectralProfile:
    """S(t) = 2^-k sum_r (-1)^(<r,t> + alpha(r)), by direct summation."""
    table = getattr(alpha, "table", alpha)
    k = table.n
    size = 1 << k
    signs = 1.0 - 2.0 * table.to_array()
    r = np.arange(size)
    overlap = np.bitwise_and.outer(r, r)
    parity = _assignment_weights(k)[overlap] & 1
    chars = 1.0 - 2.0 * parity
    return SpectralProfile(k, chars @ signs / size)
