"""Growth processes: initial distributions, exact iteration, sampling.

Distributions live on one of two domains.  ``general`` keys are truth-table
bits of n-adic functions.  ``linear`` keys are coefficient vectors
(bit 0 is the constant c_0, bit j the coefficient of x_j), used whenever the
connective is linear, since every member of A_0 is then affine and the
process never leaves the affine functions.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator, Optional

import numpy as np

from . import _sampler
from .boolfn import (
    LinearFn,
    TruthTable,
    _assignment_weights,
    compose_bits,
    full_mask,
    linear_coeffs,
    linear_to_tt,
    make_basis,
)
from .connective import CharPoly, Connective, evaluate

log = logging.getLogger(__name__)

GENERAL_MAX_N = 4
LINEAR_MAX_N = 20
TUPLE_BUDGET = 10**8
CLOSURE_BUDGET = 1 << 16
DRIFT_TOL = 1e-9
_CHUNK = 1 << 18
_MC_BLOCK = 1 << 14


class BudgetExceeded(RuntimeError):
    def __init__(self, what: str, required: int, budget: int):
        super().__init__(f"{what}: needs {required} > budget {budget}")
        self.required = required
        self.budget = budget


class DriftError(RuntimeError):
    pass


def default_workers() -> int:
    env = os.environ.get("BOOLGROW_THREADS")
    if env:
        return max(1, int(env))
    return 1


@dataclass(frozen=True)
class SupportSpec:
    n: int
    negations: bool = False
    const0: bool = False
    const1: bool = False

    @classmethod
    def parse(cls, n: int, text: str) -> "SupportSpec":
        flags = {t.strip() for t in text.split(",") if t.strip()}
        unknown = flags - {"proj", "neg", "const0", "const1"}
        if unknown:
            raise ValueError(f"unknown support flags {sorted(unknown)}")
        return cls(n, "neg" in flags, "const0" in flags, "const1" in flags)

    def label(self) -> str:
        parts = ["proj"]
        parts += [name for name, on in (("neg", self.negations), ("const0", self.const0),
                                        ("const1", self.const1)) if on]
        return ",".join(parts)

    def members(self) -> list:
        out = [make_basis(self.n, "proj", j) for j in range(1, self.n + 1)]
        if self.negations:
            out += [make_basis(self.n, "neg", j) for j in range(1, self.n + 1)]
        if self.const0:
            out.append(make_basis(self.n, "const0"))
        if self.const1:
            out.append(make_basis(self.n, "const1"))
        return out


@dataclass(frozen=True)
class ProcessSpec:
    support: SupportSpec
    alpha: Connective

    def __post_init__(self):
        if self.alpha.k < 1:
            raise ValueError("connective arity must be >= 1")

    @property
    def n(self) -> int:
        return self.support.n

    @property
    def domain(self) -> str:
        return "linear" if self.alpha.props.linear else "general"


@dataclass(frozen=True, eq=False)
class Distribution:
    domain: str
    n: int
    ids: np.ndarray
    probs: np.ndarray
    iteration: int = 0
    drift: float = 0.0  # |sum - 1| before the step's renormalisation

    def __post_init__(self):
        if self.domain not in ("general", "linear"):
            raise ValueError(f"unknown domain {self.domain!r}")
        if self.ids.shape != self.probs.shape:
            raise ValueError("ids/probs shape mismatch")
        if self.ids.size and (self.ids.min() < 0 or self.ids.max() >= self.space):
            raise ValueError("function id outside the domain")

    @property
    def space(self) -> int:
        """Number of ids in the domain."""
        return 1 << (self.n + 1) if self.domain == "linear" else 1 << (1 << self.n)

    @classmethod
    def from_dense(cls, domain: str, n: int, dense: np.ndarray, iteration: int = 0,
                   drift: float = 0.0) -> "Distribution":
        ids = np.flatnonzero(dense > 0)
        return cls(domain, n, ids.astype(np.int64), dense[ids].astype(float), iteration, drift)

    @classmethod
    def from_mapping(cls, domain: str, n: int, mapping: dict, iteration: int = 0) -> "Distribution":
        keys = sorted(int(k) for k in mapping)
        return cls(domain, n, np.array(keys, dtype=np.int64),
                   np.array([float(mapping[k]) for k in keys]), iteration)

    def dense(self) -> np.ndarray:
        out = np.zeros(self.space)
        out[self.ids] = self.probs
        return out

    def as_dict(self) -> dict:
        return {int(i): float(p) for i, p in zip(self.ids, self.probs)}

    def total(self) -> float:
        return float(self.probs.sum())

    def prob(self, fid: int) -> float:
        j = np.searchsorted(self.ids, fid)
        return float(self.probs[j]) if j < self.ids.size and self.ids[j] == fid else 0.0

    def table(self, fid: int) -> TruthTable:
        if self.domain == "linear":
            return linear_to_tt(LinearFn(self.n, int(fid)))
        return TruthTable(self.n, int(fid))

    def key(self, fid: int) -> str:
        if self.domain == "linear":
            return str(LinearFn(self.n, int(fid)))
        return TruthTable(self.n, int(fid)).to_hex()

    def parse_key(self, text: str) -> int:
        if self.domain == "linear":
            lin = LinearFn.parse(text)
            if lin.n != self.n:
                raise ValueError(f"coefficient string {text!r} does not have n+1 digits")
            return lin.bits
        return TruthTable.from_hex(self.n, text).bits

    def marginals(self) -> np.ndarray:
        """P[f(x) = 1] for every assignment x (index order as in truth tables)."""
        xs = np.arange(1 << self.n, dtype=np.int64)
        if self.domain == "linear":
            c0 = self.ids & 1
            parity = _assignment_weights(self.n + 1)[(self.ids[:, None] >> 1) & xs[None, :]] & 1
            values = c0[:, None] ^ parity
        else:
            values = (self.ids[:, None] >> xs[None, :]) & 1
        return self.probs @ values

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "domain": self.domain,
            "iteration": self.iteration,
            "entries": [{"fn": self.key(i), "p": float(p)} for i, p in zip(self.ids, self.probs)],
        }

    @classmethod
    def from_json(cls, data: dict) -> "Distribution":
        try:
            stub = cls(data["domain"], int(data["n"]), np.zeros(0, np.int64), np.zeros(0))
            mapping = {}
            for e in data["entries"]:
                mapping[stub.parse_key(str(e["fn"]))] = float(e["p"])
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed distribution JSON: {exc}") from exc
        return cls.from_mapping(stub.domain, stub.n, mapping, int(data.get("iteration", 0)))

    def with_probs(self, probs: np.ndarray) -> "Distribution":
        return Distribution(self.domain, self.n, self.ids, probs, self.iteration, self.drift)


def _support_ids(spec: ProcessSpec) -> np.ndarray:
    members = spec.support.members()
    if spec.domain == "linear":
        ids = [linear_coeffs(f).bits for f in members]
    else:
        ids = [f.bits for f in members]
    return np.unique(np.array(ids, dtype=np.int64))


def initial_distribution(spec: ProcessSpec) -> Distribution:
    n, domain = spec.n, spec.domain
    cap = LINEAR_MAX_N if domain == "linear" else GENERAL_MAX_N
    if not 1 <= n <= cap:
        raise BudgetExceeded(f"{domain} exact domain arity", n, cap)
    ids = _support_ids(spec)
    return Distribution(domain, n, ids, np.full(ids.size, 1.0 / ids.size))


def _tuple_chunks(total: int) -> list:
    return [(s, min(s + _CHUNK, total)) for s in range(0, total, _CHUNK)]


def _general_chunk(pi: Distribution, alpha: Connective, lo: int, hi: int) -> np.ndarray:
    k, m = alpha.k, pi.ids.size
    t = np.arange(lo, hi, dtype=np.int64)
    args, weight = [], np.ones(hi - lo)
    for slot in range(k):
        idx = (t // m ** (k - 1 - slot)) % m
        args.append(pi.ids[idx])
        weight *= pi.probs[idx]
    out = compose_bits(alpha.table.bits, k, args, full_mask(pi.n))
    out = np.broadcast_to(np.asarray(out, dtype=np.int64), t.shape)
    return np.bincount(out, weights=weight, minlength=pi.space)


def _xor_convolve(a: Distribution, b: Distribution) -> np.ndarray:
    need = a.ids.size * b.ids.size
    if need > TUPLE_BUDGET:
        raise BudgetExceeded("linear convolution pairs", need, TUPLE_BUDGET)
    acc = np.zeros(a.space)
    rows = max(1, _CHUNK // max(1, b.ids.size))
    for s in range(0, a.ids.size, rows):
        ia, pa = a.ids[s:s + rows], a.probs[s:s + rows]
        keys = (ia[:, None] ^ b.ids[None, :]).ravel()
        acc += np.bincount(keys, weights=(pa[:, None] * b.probs[None, :]).ravel(), minlength=a.space)
    return acc


def _finish(pi: Distribution, dense: np.ndarray) -> Distribution:
    total = dense.sum()
    drift = abs(total - 1.0)
    if drift > DRIFT_TOL:
        raise DriftError(f"probability mass drifted by {drift:.3e} at step {pi.iteration + 1}")
    log.debug("step %d: mass drift %.3e", pi.iteration + 1, drift)
    # renormalise: sum(pi)^k amplifies rounding by k per step otherwise
    return Distribution.from_dense(pi.domain, pi.n, dense / total, pi.iteration + 1, drift)


def step_exact(pi: Distribution, alpha: Connective, workers: Optional[int] = None) -> Distribution:
    """One exact iteration: push pi^k through alpha.

    Work is split into fixed tuple blocks whose partial sums are combined in
    block order, so the result does not depend on ``workers``.
    """
    if pi.domain == "linear":
        lin = linear_coeffs(alpha.table)
        if lin is None:
            raise ValueError("linear-domain distribution needs a linear connective")
        acc = None
        for j in range(1, alpha.k + 1):
            if (lin.bits >> j) & 1:
                acc = pi if acc is None else Distribution.from_dense(
                    "linear", pi.n, _xor_convolve(acc, pi))
        if acc is None:
            dense = np.zeros(pi.space)
            dense[0] = 1.0
        else:
            dense = acc.dense()
        if lin.bits & 1:
            dense = dense[np.arange(pi.space) ^ 1]
        return _finish(pi, dense)

    k, m = alpha.k, pi.ids.size
    need = m**k
    if need > TUPLE_BUDGET:
        raise BudgetExceeded("exact step tuples", need, TUPLE_BUDGET)
    chunks = _tuple_chunks(need)
    workers = workers or default_workers()
    acc = np.zeros(pi.space)
    if workers == 1 or len(chunks) == 1:
        for lo, hi in chunks:
            acc += _general_chunk(pi, alpha, lo, hi)
    else:
        with ThreadPoolExecutor(workers) as pool:
            for part in pool.map(lambda c: _general_chunk(pi, alpha, *c), chunks):
                acc += part
    return _finish(pi, acc)


def iterates(spec: ProcessSpec, steps: int, workers: Optional[int] = None) -> Iterator[Distribution]:
    """Yield pi_0, pi_1, ..., pi_steps."""
    pi = initial_distribution(spec)
    yield pi
    for _ in range(steps):
        pi = step_exact(pi, spec.alpha, workers)
        yield pi


def iterate_exact(spec: ProcessSpec, steps: int, workers: Optional[int] = None) -> Distribution:
    if steps < 0:
        raise ValueError("steps must be >= 0")
    for pi in iterates(spec, steps, workers):
        pass
    return pi


@dataclass
class ClosureReport:
    domain: str
    n: int
    levels: list = field(repr=False)  # supp(pi_i) for i <= closed_at
    period_start: int = 0
    closed_at: int = 0

    @property
    def union_support(self) -> frozenset:
        return self.even_part | self.odd_part

    @property
    def even_part(self) -> frozenset:
        return frozenset().union(*self.levels[0::2])

    @property
    def odd_part(self) -> frozenset:
        return frozenset().union(*self.levels[1::2])

    def eventual(self, parity: int) -> frozenset:
        """Union of the recurring levels with the given depth parity."""
        cyc = range(self.period_start, self.closed_at)
        return frozenset().union(*[self.levels[i] for i in cyc if i % 2 == parity])

    def to_json(self) -> dict:
        stub = Distribution(self.domain, self.n, np.zeros(0, np.int64), np.zeros(0))
        keys = lambda s: [stub.key(i) for i in sorted(s)]
        return {
            "n": self.n,
            "domain": self.domain,
            "closed_at": self.closed_at,
            "period_start": self.period_start,
            "union_support": keys(self.union_support),
            "even_part": keys(self.even_part),
            "odd_part": keys(self.odd_part),
        }


def _uniform_on(domain: str, n: int, ids) -> Distribution:
    arr = np.array(sorted(ids), dtype=np.int64)
    return Distribution(domain, n, arr, np.full(arr.size, 1.0 / arr.size))


def support_closure(spec: ProcessSpec, max_levels: int = 256) -> ClosureReport:
    """Level sets S_0 = supp(mu), S_{i+1} = alpha(S_i^k) until a level repeats.

    ``closed_at`` is the first depth whose level set already occurred, at
    depth ``period_start``; levels past that point cycle.
    """
    pi = initial_distribution(spec)
    levels = [frozenset(int(i) for i in pi.ids)]
    seen = {levels[0]: 0}
    for depth in range(1, max_levels + 1):
        nxt = step_exact(_uniform_on(pi.domain, pi.n, levels[-1]), spec.alpha)
        level = frozenset(int(i) for i in nxt.ids)
        if len(level) > CLOSURE_BUDGET:
            raise BudgetExceeded("closure size", len(level), CLOSURE_BUDGET)
        if level in seen:
            return ClosureReport(pi.domain, pi.n, levels, seen[level], depth)
        seen[level] = depth
        levels.append(level)
    raise BudgetExceeded("closure depth", max_levels + 1, max_levels)


# -- sampling -----------------------------------------------------------


def _sampler_args(spec: ProcessSpec):
    if spec.n > 5:
        raise BudgetExceeded("sampler arity", spec.n, 5)
    support = np.array([f.bits for f in spec.support.members()], dtype=np.uint64)
    kernels = _sampler.compile_kernel(spec.alpha.table.bits, spec.alpha.k)
    return kernels, support, np.uint64(full_mask(spec.n))


def sample_formula(spec: ProcessSpec, depth: int, seed: int, index: int = 0) -> TruthTable:
    """Truth table of one random depth-``depth`` formula (sample ``index`` of ``seed``)."""
    if depth < 0:
        raise ValueError("depth must be >= 0")
    (one, _), support, mask = _sampler_args(spec)
    bits = one(np.uint64(seed), np.uint64(index), depth, support, mask)
    return TruthTable(spec.n, int(bits))


def _leaf_label(f: TruthTable, spec: ProcessSpec) -> str:
    for j in range(1, spec.n + 1):
        if f == make_basis(spec.n, "proj", j):
            return f"x{j}"
        if f == make_basis(spec.n, "neg", j):
            return f"~x{j}"
    return "1" if f.bits else "0"


def formula_text(spec: ProcessSpec, depth: int, seed: int, index: int = 0) -> str:
    """Debug rendering of the full sampled tree, e.g. ``maj3(x1, x2, 0)``.

    Includes subtrees the compiled sampler skips; they do not affect the value.
    """
    members = spec.support.members()
    name = spec.alpha.name or f"a{spec.alpha.table.to_hex()}"
    k = spec.alpha.k

    def build(level: int, node: int) -> str:
        if level == depth:
            j = _sampler.leaf_draw_py(seed, index, node, len(members))
            return _leaf_label(members[j], spec)
        kids = ", ".join(build(level + 1, node * k + j) for j in range(k))
        return f"{name}({kids})"

    return build(0, 0)


def monte_carlo(spec: ProcessSpec, depth: int, samples: int, seed: int,
                workers: Optional[int] = None) -> Distribution:
    """Empirical pi_depth from ``samples`` independent formulas.

    Samples are generated in fixed blocks, each filling its own slice of the
    output, so any worker count yields the same bytes.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if depth < 0:
        raise ValueError("depth must be >= 0")
    (_, block), support, mask = _sampler_args(spec)
    out = np.empty(samples, dtype=np.uint64)
    useed = np.uint64(seed)

    def run(start: int) -> None:
        stop = min(start + _MC_BLOCK, samples)
        block(out[start:stop], start, useed, depth, support, mask)

    starts = range(0, samples, _MC_BLOCK)
    workers = workers or default_workers()
    if workers == 1:
        for s in starts:
            run(s)
    else:
        with ThreadPoolExecutor(workers) as pool:
            list(pool.map(run, starts))
    ids, counts = np.unique(out, return_counts=True)
    return Distribution("general", spec.n, ids.astype(np.int64), counts / samples, depth)


def scalar_trajectory(A: CharPoly, p0: float, iters: int) -> list:
    """[p0, A(p0), A(A(p0)), ...] of length iters + 1."""
    if not 0 <= p0 <= 1:
        raise ValueError("p0 must lie in [0, 1]")
    out = [float(p0)]
    for _ in range(iters):
        out.append(min(1.0, max(0.0, evaluate(A, out[-1]))))
    return out


def initial_marginals(spec: ProcessSpec) -> np.ndarray:
    """p_0(x): fraction of supp(mu) true at each assignment x."""
    members = spec.support.members()
    return np.mean([f.to_array() for f in members], axis=0)


def distance(a: Distribution, b: Distribution, metric: str = "maxabs") -> float:
    if (a.domain, a.n) != (b.domain, b.n):
        raise ValueError("distributions live on different domains")
    keys = np.union1d(a.ids, b.ids)
    da = np.zeros(keys.size)
    db = np.zeros(keys.size)
    da[np.searchsorted(keys, a.ids)] = a.probs
    db[np.searchsorted(keys, b.ids)] = b.probs
    diff = np.abs(da - db)
    if metric == "maxabs":
        return float(diff.max()) if diff.size else 0.0
    if metric == "tv":
        return 0.5 * float(diff.sum())
    raise ValueError(f"unknown metric {metric!r}")


def convert_domain(pi: Distribution, domain: str) -> Distribution:
    """Re-key a linear-domain distribution by truth tables (or back)."""
    if pi.domain == domain:
        return pi
    mapping: dict = {}
    for fid, p in zip(pi.ids, pi.probs):
        if domain == "general":
            key = linear_to_tt(LinearFn(pi.n, int(fid))).bits
        else:
            lin = linear_coeffs(TruthTable(pi.n, int(fid)))
            if lin is None:
                raise ValueError("distribution has non-linear members")
            key = lin.bits
        mapping[key] = mapping.get(key, 0.0) + float(p)
    return Distribution.from_mapping(domain, pi.n, mapping, pi.iteration)

