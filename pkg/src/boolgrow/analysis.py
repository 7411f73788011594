"""Limit prediction, convergence measurement and numerical lemma checks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import permutations
from typing import Callable, Iterable, Optional

import numpy as np

from . import spectrum as sp
from .boolfn import (
    TruthTable,
    chi,
    full_mask,
    threshold,
    upsilon,
    weight_bits,
)
from .connective import (
    CharPoly,
    Connective,
    ConvergenceClass,
    FixedPointKind,
    char_poly,
    convergence_class,
    evaluate,
    fixed_point,
    preset,
    spectral_profile,
)
from .process import (
    BudgetExceeded,
    Distribution,
    ProcessSpec,
    SupportSpec,
    distance,
    initial_distribution,
    iterates,
    step_exact,
)

LIMIT_MAX_N = 4


# -- predictions ------------------------------------------------------------


@dataclass(frozen=True)
class SetDescriptor:
    """A family of functions; ``params`` depend on ``kind``.

    kinds: threshold (t,), all_linear (), linear_constrained (((name, bit), ...),),
    self_dual (), all_functions (), slice (m,), self_dual_slice (),
    bi_preserving (), explicit (ids,).
    """

    kind: str
    params: tuple = ()

    def __str__(self) -> str:
        if self.kind == "threshold":
            return f"Threshold({self.params[0]})"
        if self.kind == "slice":
            return f"Slice({self.params[0]})"
        if self.kind == "linear_constrained":
            return "LinearConstrained(" + ", ".join(f"{k}={v}" for k, v in self.params[0]) + ")"
        if self.kind == "explicit":
            return f"ExplicitSet({list(self.params[0])})"
        return "".join(part.capitalize() for part in self.kind.split("_"))

    def to_json(self) -> dict:
        out: dict = {"kind": self.kind}
        if self.kind in ("threshold", "slice"):
            out["level"] = self.params[0]
        elif self.kind == "linear_constrained":
            out["constraints"] = {k: v for k, v in self.params[0]}
        elif self.kind == "explicit":
            out["ids"] = list(self.params[0])
        return out


@dataclass(frozen=True)
class Prediction:
    kind: str  # concentrated | uniform | alternating | unknown | degenerate
    theorem_tag: str
    descriptor: Optional[SetDescriptor] = None
    odd: Optional[SetDescriptor] = None  # alternating: limit of odd iterates
    note: str = ""

    def __str__(self) -> str:
        if self.kind == "alternating":
            return f"Alternating(even={self.descriptor}, odd={self.odd})"
        if self.kind == "concentrated":
            return f"Concentrated({self.descriptor})"
        if self.kind == "uniform":
            return f"UniformOnSet({self.descriptor})"
        return self.kind.capitalize()

    def to_json(self) -> dict:
        out = {"kind": self.kind, "theorem": self.theorem_tag, "summary": str(self)}
        if self.descriptor is not None:
            out["even" if self.kind == "alternating" else "set"] = self.descriptor.to_json()
        if self.odd is not None:
            out["odd"] = self.odd.to_json()
        if self.note:
            out["note"] = self.note
        return out


def _linear_prediction(spec: ProcessSpec) -> Prediction:
    """Limit from the unit-magnitude Fourier coefficients of pi_0.

    Only w in {0, c_0, all variables, both} can have |Delta_0(w)| = 1; each
    such sign evolves as Delta' = (-1)^(c w_0) Delta^k and pins one parity
    constraint on the limit.
    """
    n = spec.n
    pi0 = initial_distribution(spec)
    lin_alpha = spec.alpha.table
    from .boolfn import linear_coeffs

    lin = linear_coeffs(lin_alpha)
    c = lin.bits & 1
    kk = bin(lin.bits >> 1).count("1")
    variables = ((1 << (n + 1)) - 1) ^ 1
    names = {1: "c0", variables: "parity", variables | 1: "c0^parity"}
    even, odd = [], []
    for w, name in names.items():
        bits = [bin(int(g) & w).count("1") & 1 for g in pi0.ids]
        if len(set(bits)) != 1:
            continue
        s0 = -1 if bits[0] else 1
        flip = -1 if c and (w & 1) else 1
        if kk % 2 == 0:
            s_even = s_odd = flip
        else:
            s_even, s_odd = s0, flip * s0
        even.append((name, (1 - s_even) // 2))
        odd.append((name, (1 - s_odd) // 2))

    def descriptor(cons):
        return SetDescriptor("linear_constrained", (tuple(cons),)) if cons else SetDescriptor("all_linear")

    if even != odd:
        return Prediction("alternating", "linear-alternating", descriptor(even), descriptor(odd))
    return Prediction("uniform", "linear-uniform", descriptor(even))


def _is_selection(alpha: Connective) -> bool:
    if alpha.k != 3:
        return False
    mux = preset("mux").table
    for perm in permutations(range(3)):
        moved = TruthTable.from_callable(3, lambda *x: mux(sum(x[perm[j]] << j for j in range(3))))
        if moved == alpha.table:
            return True
    return False


def _weight_marginals(s: SupportSpec) -> list:
    """p_0 at an assignment of each weight m = 0..n (monotone supports only)."""
    total = s.n + int(s.const0) + int(s.const1)
    return [Fraction(m + int(s.const1), total) for m in range(s.n + 1)]


def predict(spec: ProcessSpec) -> Prediction:
    alpha, s, n = spec.alpha, spec.support, spec.n
    props = alpha.props
    if alpha.k == 1 or not props.depends_on_all:
        return Prediction("degenerate", "depends-on-all", note="connective ignores an argument or is unary")

    if props.linear:
        return _linear_prediction(spec)

    if s.negations and not (s.const0 or s.const1) and props.self_dual:
        return Prediction("uniform", "self-dual", SetDescriptor("self_dual"))
    if s.negations and s.const0 and s.const1 and props.balanced:
        return Prediction("uniform", "full-support", SetDescriptor("all_functions"))

    if props.monotone and not s.negations:
        report = fixed_point(char_poly(alpha))
        if report.kind is FixedPointKind.ABOVE:
            t = 0 if s.const1 else 1
            return Prediction("concentrated", "no-fixed-point", SetDescriptor("threshold", (t,)))
        if report.kind is FixedPointKind.BELOW:
            t = n + 1 if s.const0 else n
            return Prediction("concentrated", "no-fixed-point", SetDescriptor("threshold", (t,)))
        # interior fixed point: each input amplifies away from s unless p_0 hits it exactly
        fixed = Fraction(1, 2) if props.balanced else None
        p0 = _weight_marginals(s)
        ties = [m for m, p in enumerate(p0) if fixed is not None and p == fixed]
        if not ties:
            level = next((m for m, p in enumerate(p0) if p > report.s), n + 1)
            tag = "balanced-threshold" if props.balanced else "unbalanced-threshold"
            return Prediction("concentrated", tag, SetDescriptor("threshold", (level,)))
        m = ties[0]
        if not (s.const0 or s.const1) and props.self_dual and 2 * m == n:
            return Prediction("uniform", "self-dual-slice", SetDescriptor("self_dual_slice"))
        return Prediction("uniform", "slice", SetDescriptor("slice", (m,)))

    if _is_selection(alpha) and not (s.negations or s.const0 or s.const1):
        # A(p) = p here, so each input keeps its initial marginal |x|/n; the
        # uniform limit needs 1/2 at every non-constant input, i.e. n <= 2
        if n <= 2:
            return Prediction("uniform", "bi-preserving", SetDescriptor("bi_preserving"))
        return Prediction("unknown", "bi-preserving",
                          note="selection connective keeps marginals |x|/n; uniform limit only for n <= 2")
    return Prediction("unknown", "none")


# -- materialisation --------------------------------------------------------


@lru_cache(maxsize=None)
def _all_tables(n: int) -> np.ndarray:
    return np.arange(1 << (1 << n), dtype=np.int64)


def _reverse_table_bits(ids: np.ndarray, n: int) -> np.ndarray:
    size = 1 << n
    out = np.zeros_like(ids)
    for a in range(size):
        out |= ((ids >> a) & 1) << (size - 1 - a)
    return out


def _self_dual_ids(n: int) -> np.ndarray:
    ids = _all_tables(n)
    return ids[(_reverse_table_bits(ids, n) ^ full_mask(n)) == ids]


def _slice_ids(n: int, m: int) -> np.ndarray:
    above = weight_bits(n, m + 1, n) if m < n else 0
    level = weight_bits(n, m)
    ids = _all_tables(n)
    return ids[(ids & ~level) == above]


def materialize(desc: SetDescriptor, n: int, domain: str = "general") -> np.ndarray:
    """Sorted ids of every function in the described set."""
    if domain == "linear" or desc.kind in ("all_linear", "linear_constrained"):
        if domain != "linear":
            raise ValueError("linear descriptors materialise in the linear domain")
        ids = np.arange(1 << (n + 1), dtype=np.int64)
        if desc.kind == "all_linear":
            return ids
        if desc.kind != "linear_constrained":
            raise ValueError(f"{desc} is not a linear-domain set")
        parity = np.bitwise_count((ids >> 1).astype(np.uint64)).astype(np.int64) & 1
        values = {"c0": ids & 1, "parity": parity, "c0^parity": (ids & 1) ^ parity}
        keep = np.ones(ids.size, dtype=bool)
        for name, bit in desc.params[0]:
            keep &= values[name] == bit
        return ids[keep]
    if n > LIMIT_MAX_N:
        raise BudgetExceeded("limit materialisation arity", n, LIMIT_MAX_N)
    kind = desc.kind
    if kind == "threshold":
        return np.array([threshold(n, desc.params[0]).bits], dtype=np.int64)
    if kind == "all_functions":
        return _all_tables(n)
    if kind == "self_dual":
        return _self_dual_ids(n)
    if kind == "slice":
        return _slice_ids(n, desc.params[0])
    if kind == "self_dual_slice":
        if n % 2:
            raise ValueError("self-dual slice needs even n")
        return np.intersect1d(_slice_ids(n, n // 2), _self_dual_ids(n))
    if kind == "bi_preserving":
        ids = _all_tables(n)
        return ids[((ids & 1) == 0) & (((ids >> ((1 << n) - 1)) & 1) == 1)]
    if kind == "explicit":
        return np.array(sorted(desc.params[0]), dtype=np.int64)
    raise ValueError(f"cannot materialise {desc}")


def _uniform(domain: str, n: int, ids: np.ndarray) -> Distribution:
    return Distribution(domain, n, ids, np.full(ids.size, 1.0 / ids.size))


def limit_distribution(pred: Prediction, spec: ProcessSpec):
    """Uniform distribution on the predicted set (a pair for alternating limits)."""
    if pred.kind in ("unknown", "degenerate"):
        raise ValueError(f"no limit to materialise for a {pred.kind} prediction")
    domain = spec.domain
    if pred.kind == "alternating":
        return (_uniform(domain, spec.n, materialize(pred.descriptor, spec.n, domain)),
                _uniform(domain, spec.n, materialize(pred.odd, spec.n, domain)))
    return _uniform(domain, spec.n, materialize(pred.descriptor, spec.n, domain))


# -- convergence ------------------------------------------------------------


@dataclass(frozen=True)
class IterationBound:
    tag: str
    value: Optional[float]
    has_unknown_constant: bool

    def to_json(self) -> dict:
        return {"bound_tag": self.tag, "value": self.value,
                "has_unknown_constant": self.has_unknown_constant}


def theoretical_iterations(spec: ProcessSpec, epsilon: float = 0.0) -> IterationBound:
    """Iteration-count bound matching the spec's prediction (logs base 2).

    ``epsilon`` is only used by the savbounds formula; the other bounds are
    stated for the fixed target 2^-n.
    """
    pred = predict(spec)
    alpha, n, k = spec.alpha, spec.n, spec.alpha.k
    log_n = math.log2(n) if n > 1 else 0.0
    if pred.kind in ("unknown", "degenerate"):
        return IterationBound("none", None, False)
    if alpha.props.linear:
        return IterationBound("linear", 2 * math.log(n) / math.log(k), False)
    if pred.descriptor.kind == "all_functions":
        c = epsilon if 0 < epsilon < 1 else 2.0**-n
        return IterationBound("savbounds", float(sp.bound_constants(alpha, n).solve_savbounds(c)), False)
    if alpha.props.monotone:
        kind = fixed_point(char_poly(alpha)).kind
        if kind is FixedPointKind.INTERIOR:
            return IterationBound("bound-fp", k * 2**k * log_n, True)
        cls = convergence_class(alpha)
        if cls is ConvergenceClass.FAST:
            return IterationBound("fast", 3 * log_n, True)
        if cls is ConvergenceClass.SLOW:
            return IterationBound("slow", n ** (k - 2) / (k - 1) * log_n, True)
    return IterationBound("none", None, False)


@dataclass
class ConvergenceReport:
    epsilon: float
    iterations_measured: Optional[int]
    bound: IterationBound
    trajectory: list = field(default_factory=list)
    converged: bool = True

    def to_json(self) -> dict:
        out = {"epsilon": self.epsilon, "iterations_measured": self.iterations_measured,
               "converged": self.converged, "trajectory": self.trajectory}
        out.update(self.bound.to_json())
        return out


def empirical_convergence(spec: ProcessSpec, epsilon: float, max_i: int = 60,
                          workers: Optional[int] = None) -> ConvergenceReport:
    """Distance (max-abs) from pi_i to the predicted limit for i = 0..max_i.

    Alternating limits are compared against the limit of matching parity.
    The report keeps the full trajectory; ``iterations_measured`` is the
    first i below ``epsilon``.
    """
    pred = predict(spec)
    limit = limit_distribution(pred, spec)
    bound = theoretical_iterations(spec, epsilon)
    traj, hit = [], None
    for i, pi in enumerate(iterates(spec, max_i, workers)):
        target = limit[i % 2] if isinstance(limit, tuple) else limit
        dist = distance(pi, target)
        traj.append(dist)
        if hit is None and dist < epsilon:
            hit = i
            if i >= max_i:
                break
    return ConvergenceReport(epsilon, hit, bound, traj, hit is not None)


def log_linear_slope(values: Iterable[float], start: int = 0) -> float:
    """Least-squares slope of log(values[i]) against i over positive entries."""
    ys = np.asarray(list(values), dtype=float)
    xs = np.arange(ys.size)
    keep = (xs >= start) & (ys > 0)
    if keep.sum() < 2:
        raise ValueError("need two positive values to fit a slope")
    return float(np.polyfit(xs[keep], np.log(ys[keep]), 1)[0])


def scalar_exit_iterations(A: CharPoly, p0: float, eps0: float, max_iter: int = 10**7) -> int:
    """Iterations of p -> A(p) from p0 until p leaves [eps0, 1 - eps0]."""
    p = p0
    for i in range(max_iter + 1):
        if not eps0 <= p <= 1 - eps0:
            return i
        p = evaluate(A, p)
    raise RuntimeError("trajectory did not leave the interval")


# -- lemma checks -----------------------------------------------------------


@dataclass
class CheckResult:
    lemma: str
    population: str
    passed: bool
    checked: int
    worst_margin: Optional[float] = None
    witness: Optional[str] = None
    detail: str = ""

    def to_json(self) -> dict:
        return {"lemma": self.lemma, "population": self.population, "pass": bool(self.passed),
                "checked": self.checked, "worst_margin": self.worst_margin,
                "witness": self.witness, "detail": self.detail}


@dataclass(frozen=True)
class ConnectiveSet:
    description: str
    members: tuple


@lru_cache(maxsize=None)
def monotone_tables(k: int) -> tuple:
    """All monotone k-adic tables, via f = (f0 on x_k=0, f1 on x_k=1) with f0 <= f1."""
    if k == 0:
        return (0, 1)
    lower = monotone_tables(k - 1)
    half = 1 << (k - 1)
    return tuple(sorted(f0 | (f1 << half) for f0 in lower for f1 in lower if f0 & ~f1 == 0))


def monotone_population(k_max: int = 4, sample_k5: int = 0, seed: int = 0) -> ConnectiveSet:
    members = [Connective(TruthTable(k, b)) for k in range(1, min(k_max, 4) + 1)
               for b in monotone_tables(k)]
    desc = f"all monotone, arity 1..{min(k_max, 4)}"
    if sample_k5:
        pool = monotone_tables(5)
        pick = np.random.default_rng(seed).choice(len(pool), size=min(sample_k5, len(pool)), replace=False)
        members += [Connective(TruthTable(5, pool[j])) for j in sorted(pick)]
        desc += f" + {len(pick)} sampled monotone arity 5 (seed {seed})"
    return ConnectiveSet(desc, tuple(members))


def all_population(k_max: int = 3) -> ConnectiveSet:
    members = [Connective(TruthTable(k, b)) for k in range(1, k_max + 1) for b in range(1 << (1 << k))]
    return ConnectiveSet(f"all connectives, arity 1..{k_max}", tuple(members))


CharPolyFn = Callable[[Connective], CharPoly]


def _label(alpha: Connective) -> str:
    return f"k={alpha.k} table={alpha.table.to_hex()}"


class _Scan:
    """Track the worst margin over a population; a negative margin fails."""

    def __init__(self, lemma: str, population: str, tol: float = 0.0, strict: bool = False):
        self.lemma, self.population, self.tol, self.strict = lemma, population, tol, strict
        self.checked, self.worst, self.witness = 0, math.inf, None

    def record(self, margin: float, witness: str) -> None:
        self.checked += 1
        if margin < self.worst:
            self.worst, self.witness = margin, witness

    def result(self, detail: str = "") -> CheckResult:
        passed = self.worst > 0 if self.strict else self.worst >= -self.tol
        worst = None if self.checked == 0 else float(self.worst)
        return CheckResult(self.lemma, self.population, bool(passed), self.checked, worst,
                           None if passed else self.witness, detail)


def _grid(lo: float, hi: float, points: int = 1000) -> np.ndarray:
    return lo + (hi - lo) * np.arange(1, points + 1) / (points + 1)


def _below_everywhere(A: CharPoly) -> bool:
    return fixed_point(A).kind is FixedPointKind.BELOW


def check_bal(pop: ConnectiveSet, cp: CharPolyFn = char_poly) -> CheckResult:
    scan = _Scan("Bal", pop.description)
    for alpha in pop.members:
        A = cp(alpha)
        half = A.exact(Fraction(1, 2)) == Fraction(1, 2)
        balanced = 2 * alpha.table.weight() == alpha.table.size
        scan.record(0.0 if half == balanced else -1.0,
                    f"{_label(alpha)}: A(1/2)=1/2 is {half}, balanced is {balanced}")
    return scan.result("A(1/2) = 1/2 iff balanced, exact rationals")


def check_equiv(pop: ConnectiveSet, denominator_bound: int = 50, cp: CharPolyFn = char_poly,
                tol: float = 1e-9) -> CheckResult:
    scan = _Scan("Equiv", pop.description)
    for alpha in pop.members:
        if not alpha.props.monotone:
            continue
        rep = fixed_point(cp(alpha))
        if rep.kind is not FixedPointKind.INTERIOR:
            continue
        s = rep.s
        if abs(s - 0.5) <= tol:
            scan.record(tol - abs(s - 0.5), f"{_label(alpha)}: s={s!r}")
            continue
        gap = min(abs(s - round(s * q) / q) for q in range(1, denominator_bound + 1))
        scan.record(gap - tol, f"{_label(alpha)}: s={s!r} within {gap:.3g} of a small-denominator rational")
    return scan.result(f"interior fixed points are 1/2 or > {tol:g} from p/q, q <= {denominator_bound}")


def check_fast_nfp(pop: ConnectiveSet, cp: CharPolyFn = char_poly) -> CheckResult:
    scan = _Scan("FastNFP", pop.description, tol=1e-9)
    for alpha in pop.members:
        k = alpha.k
        if k <= 2 or not alpha.props.monotone or not alpha.props.depends_on_all:
            continue
        A = cp(alpha)
        if not _below_everywhere(A) or A.beta[k - 1] > Fraction(k - 2, k):
            continue
        eps = _grid(0.0, 1.0 / (k * 2 ** (k + 1)))
        margin = evaluate(A, 1 - eps, 1) - 35 / 24
        j = int(np.argmin(margin))
        scan.record(float(margin[j]), f"{_label(alpha)}: A'(1-{eps[j]:.3g}) = {margin[j] + 35 / 24:.6g}")
    return scan.result("35/24 < A'(1-eps) on a 1000-point grid of (0, 1/(k 2^(k+1)))")


def check_slow_nfp(pop: ConnectiveSet, cp: CharPolyFn = char_poly) -> CheckResult:
    scan = _Scan("SlowNFP", pop.description, tol=1e-9)
    for alpha in pop.members:
        k = alpha.k
        if k <= 2 or not alpha.props.monotone or not alpha.props.depends_on_all:
            continue
        A = cp(alpha)
        if not _below_everywhere(A) or A.beta[k - 1] != Fraction(k - 1, k):
            continue
        eps = _grid(0.0, 1.0 / k)
        slope = evaluate(A, 1 - eps, 1)
        lower = slope - (1 + eps**k)
        upper = (1 - eps) ** (k - 2) * (k * (k - 2) * eps + 1) - slope
        for name, margin in (("lower", lower), ("upper", upper)):
            j = int(np.argmin(margin))
            scan.record(float(margin[j]), f"{_label(alpha)}: {name} side at eps={eps[j]:.3g}, margin {margin[j]:.3g}")
    return scan.result("1 + eps^k < A'(1-eps) <= (1-eps)^(k-2) (k(k-2) eps + 1) on (0, 1/k)")


def check_triv(pop: ConnectiveSet, cp: CharPolyFn = char_poly) -> CheckResult:
    scan = _Scan("Triv", pop.description, strict=True)
    p = _grid(0.0, 1.0)
    for alpha in pop.members:
        if not alpha.props.monotone:
            continue
        A = cp(alpha)
        if A.beta[1] > 0:
            continue
        k = alpha.k
        margin = (math.comb(k, 2) + 1) * p**2 - evaluate(A, p)
        # compare relative to p^2 so tiny p does not hide a violation
        rel = margin / p**2
        j = int(np.argmin(rel))
        scan.record(float(rel[j]), f"{_label(alpha)}: p={p[j]:.3g}")
    return scan.result("A(p) < (C(k,2)+1) p^2 on a 1000-point grid of (0,1); margin relative to p^2")


def check_minslope(pop: ConnectiveSet, cp: CharPolyFn = char_poly) -> CheckResult:
    scan = _Scan("MinSlope", pop.description, tol=1e-9)
    equality = None
    for alpha in pop.members:
        if not alpha.props.monotone:
            continue
        A = cp(alpha)
        rep = fixed_point(A)
        if rep.kind is not FixedPointKind.INTERIOR:
            continue
        k = alpha.k
        slope = evaluate(A, rep.s, 1)
        bound = 1 + (k - 2) / 2 ** (k - 2)
        scan.record(slope - bound, f"{_label(alpha)}: A'({rep.s:.6g}) = {slope:.9g} < {bound:.9g}")
        if alpha.table == preset("maj3").table:
            equality = slope - bound
    detail = "A'(s) >= 1 + (k-2)/2^(k-2) at interior fixed points"
    if equality is not None:
        detail += f"; MAJ3 slope minus bound = {equality:.3g}"
    return scan.result(detail)


def check_spectral_norm(pop: ConnectiveSet) -> CheckResult:
    scan = _Scan("SpectralNorm", pop.description, tol=1e-12)
    for alpha in pop.members:
        prof = spectral_profile(alpha)
        norm = float(np.sum(prof.S**2))
        scan.record(-abs(norm - 1), f"{_label(alpha)}: sum S^2 = {norm!r}")
        props = alpha.props
        agree = prof.balanced_nonlinear() == (props.balanced and not props.linear)
        scan.record(0.0 if agree else -1.0, f"{_label(alpha)}: balanced-nonlinear test disagrees")
    return scan.result("sum_t S(t)^2 = 1 and balanced-nonlinear iff S(0)=0 and max|S|<1")


def check_fourier_slice(n: int) -> CheckResult:
    ids = materialize(SetDescriptor("slice", (n // 2,)), n)
    got = sp.transform(_uniform("general", n, ids))
    overlap = sp.slice_spectrum(n, "overlap")
    parity = sp.slice_spectrum(n, "parity")
    err = float(np.max(np.abs(got.values - overlap.values)))
    parity_err = float(np.max(np.abs(got.values - parity.values)))
    passed = err == 0.0
    return CheckResult("FourierSlice", f"n={n}", passed, 1 << (1 << n), -err,
                       None if passed else f"max |transform - formula| = {err:g}",
                       f"overlap reading exact; parity reading off by {parity_err:g}")


def check_restriction(spec: ProcessSpec, i_max: int = 20, i_min: int = 5, tol: float = 1e-6) -> CheckResult:
    n = spec.n
    low, high = chi(n), upsilon(n)
    residuals = [sp.restriction_residual(sp.transform(pi), low, high) for pi in iterates(spec, i_max)]
    window = residuals[i_min:]
    rises = [i_min + j + 1 for j in range(len(window) - 1) if window[j + 1] > window[j]]
    final = residuals[-1]
    passed = final <= tol and not rises
    witness = None
    if not passed:
        witness = f"residual {final:.3g} at i={i_max}" + (f"; rises at {rises}" if rises else "")
    return CheckResult("Restriction", f"n={n} {spec.alpha.name} support={spec.support.label()}",
                       passed, len(residuals), tol - final, witness,
                       "residuals: " + ", ".join(f"{r:.3g}" for r in residuals))


def check_savicky(spec: ProcessSpec, iterations: int = 6, max_weight: int = 3, tol: float = 1e-9,
                  seed: int = 0) -> CheckResult:
    """Recurrence right-hand side vs the brute-force transformed step.

    Runs on the process iterates and on random distributions over the domain.
    """
    n, alpha = spec.n, spec.alpha
    rng = np.random.default_rng(seed)
    pis = list(iterates(spec, iterations))
    for _ in range(4):
        p = rng.random(1 << (1 << n))
        pis.append(Distribution("general", n, np.arange(p.size), p / p.sum()))
    scan = _Scan("SavickyRecurrence", f"n={n} {alpha.name} support={spec.support.label()}")
    ws = [w for w in range(1 << (1 << n)) if 0 < bin(w).count("1") <= max_weight]
    for idx, pi in enumerate(pis):
        truth = sp.transform(step_exact(pi, alpha))
        delta = sp.transform(pi)
        for w in ws:
            wt = TruthTable(n, w)
            a, y = sp.savicky_terms(delta, alpha, wt)
            pred = sum(a[j] * delta[w] ** j for j in range(alpha.k + 1)) + y
            err = abs(pred - truth[w])
            scan.record(tol - err, f"distribution {idx}, w={wt.to_hex()}: error {err:.3g}")
    return scan.result(f"|w| <= {max_weight}, tolerance {tol:g}")


LEMMAS = ("Bal", "Equiv", "FastNFP", "SlowNFP", "Triv", "MinSlope", "SpectralNorm")


def verify_lemma(which: str, population: Optional[ConnectiveSet] = None, *,
                 char_poly_fn: CharPolyFn = char_poly, **options) -> CheckResult:
    """Run one named check; polynomial lemmas scan ``population``.

    ``char_poly_fn`` lets callers substitute a perturbed polynomial
    (negative controls).  Spec-level checks take ``spec``/``n`` options.
    """
    population = population or monotone_population(4)
    if which == "Bal":
        return check_bal(population, char_poly_fn)
    if which == "Equiv":
        return check_equiv(population, options.get("denominator_bound", 50), char_poly_fn)
    if which == "FastNFP":
        return check_fast_nfp(population, char_poly_fn)
    if which == "SlowNFP":
        return check_slow_nfp(population, char_poly_fn)
    if which == "Triv":
        return check_triv(population, char_poly_fn)
    if which == "MinSlope":
        return check_minslope(population, char_poly_fn)
    if which == "SpectralNorm":
        return check_spectral_norm(population)
    if which == "FourierSlice":
        return check_fourier_slice(options.get("n", 2))
    if which == "Restriction":
        return check_restriction(options["spec"], options.get("i_max", 20))
    if which == "SavickyRecurrence":
        return check_savicky(options["spec"])
    raise ValueError(f"unknown lemma {which!r}")


def _cross_check_specs(n_max: int) -> list:
    names = ("and2", "or2", "and3", "maj3", "xor2", "xor3", "xnor3", "mux", "valiant4", "slow3")
    supports = [(neg, c0, c1) for neg in (False, True) for c0 in (False, True) for c1 in (False, True)]
    return [ProcessSpec(SupportSpec(n, *flags), preset(name))
            for n in range(1, n_max + 1) for name in names for flags in supports]


def check_prediction(spec: ProcessSpec, max_i: int = 60, tol: float = 1e-6,
                     tuple_cap: int = 2 * 10**6) -> Optional[CheckResult]:
    """Exact iteration against the materialised prediction; None if not applicable."""
    pred = predict(spec)
    if pred.kind in ("unknown", "degenerate"):
        return None
    label = f"n={spec.n} {spec.alpha.name} support={spec.support.label()}: {pred}"
    limit = limit_distribution(pred, spec)
    dist = math.inf
    try:
        for i, pi in enumerate(iterates(spec, max_i)):
            if pi.domain == "general" and pi.ids.size ** spec.alpha.k > tuple_cap and i < max_i:
                return CheckResult("Prediction", label, True, i, None, None,
                                   f"skipped after i={i}: support {pi.ids.size} exceeds the cross-check cap")
            target = limit[i % 2] if isinstance(limit, tuple) else limit
            dist = distance(pi, target)
    except BudgetExceeded as exc:
        return CheckResult("Prediction", label, True, 0, None, None, f"skipped: {exc}")
    passed = dist < tol
    return CheckResult("Prediction", label, passed, max_i, tol - dist,
                       None if passed else f"distance {dist:.3g} at i={max_i}")


def verify_all(k_max: int = 4, n_max: int = 2, sample_k5: int = 0, seed: int = 0) -> list:
    pop = monotone_population(k_max, sample_k5, seed)
    results = [verify_lemma(name, pop) for name in LEMMAS]
    results.append(check_bal(all_population(k_max)))
    for n in range(2, min(n_max, 4) + 1, 2):
        results.append(check_fourier_slice(n))
    slice_spec = ProcessSpec(SupportSpec(2, const0=True, const1=True), preset("maj3"))
    results.append(check_restriction(slice_spec))
    results.append(check_savicky(slice_spec))
    for spec in _cross_check_specs(n_max):
        res = check_prediction(spec)
        if res is not None:
            results.append(res)
    return results
