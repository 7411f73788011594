"""Command-line front end: ``boolgrow <subcommand> ...``.

Exit codes: 0 ok, 1 malformed input, 2 size cap exceeded, 3 verification
failure under ``verify --ci``.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import os
import sys
import warnings
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__, analysis, process, spectrum
from .connective import (
    Connective,
    char_poly,
    convergence_class,
    fast_hypotheses,
    fixed_point,
    preset,
    spectral_profile,
)

EXIT_OK, EXIT_MALFORMED, EXIT_CAP, EXIT_VERIFY = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_MALFORMED, f"{self.prog}: error: {message}\n")


def load_connective(source: str) -> Connective:
    """Preset name, inline JSON object, or path to a JSON file."""
    text = source.strip()
    if text.startswith("{"):
        return Connective.from_json(text)
    path = Path(source)
    if path.is_file():
        try:
            return Connective.from_json(path.read_text())
        except json.JSONDecodeError as exc:
            raise ValueError(f"{source}: {exc}") from exc
    return preset(source)


def _g(x: float) -> str:
    return format(float(x), ".17g")


def _jsonable(obj):
    if isinstance(obj, np.generic):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def _dump_json(data) -> str:
    return json.dumps(_jsonable(data), indent=2, allow_nan=False) + "\n"


def _dump_csv(header: list, rows: list) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_g(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def _emit(args, text: str) -> None:
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _spec(args) -> process.ProcessSpec:
    if args.n is None:
        raise UsageError("--n is required")
    if args.n < 1:
        raise UsageError("--n must be >= 1")
    support = process.SupportSpec.parse(args.n, args.support)
    return process.ProcessSpec(support, load_connective(args.connective))


def _workers(args) -> Optional[int]:
    return args.threads


# -- subcommands ------------------------------------------------------------


def cmd_classify(args) -> int:
    alpha = load_connective(args.connective)
    A = char_poly(alpha)
    hyp = fast_hypotheses(alpha)
    data = {
        "connective": alpha.to_json(),
        "properties": dataclasses.asdict(alpha.props),
        "char_poly": A.to_json(),
        "fixed_point": fixed_point(A).to_json(),
        "convergence_class": convergence_class(alpha).value,
        "spectral_a3": spectral_profile(alpha).a3,
    }
    if hyp is not None:
        data["fast_hypothesis"] = {
            "beta_k_minus_1": str(hyp.beta_k_minus_1),
            "beta_k_minus_2": None if hyp.beta_k_minus_2 is None else str(hyp.beta_k_minus_2),
            "readings_disagree": hyp.disagree,
        }
    _emit(args, _dump_json(data))
    return EXIT_OK


def cmd_predict(args) -> int:
    spec = _spec(args)
    pred = analysis.predict(spec)
    data = {"n": spec.n, "connective": spec.alpha.to_json(), "support": spec.support.label(),
            "prediction": pred.to_json()}
    if pred.kind not in ("unknown", "degenerate") and (spec.domain == "linear" or spec.n <= analysis.LIMIT_MAX_N):
        descs = [pred.descriptor] + ([pred.odd] if pred.odd is not None else [])
        data["set_sizes"] = [int(analysis.materialize(d, spec.n, spec.domain).size) for d in descs]
    _emit(args, _dump_json(data))
    return EXIT_OK


def cmd_iterate(args) -> int:
    spec = _spec(args)
    if args.every < 1:
        raise UsageError("--every must be >= 1")
    snaps = [pi for pi in process.iterates(spec, args.steps, _workers(args))
             if pi.iteration % args.every == 0 or pi.iteration == args.steps]
    if args.format == "csv":
        rows = [(pi.iteration, pi.key(int(f)), float(p)) for pi in snaps for f, p in zip(pi.ids, pi.probs)]
        _emit(args, _dump_csv(["iteration", "fn", "p"], rows))
    else:
        _emit(args, _dump_json([pi.to_json() for pi in snaps]))
    return EXIT_OK


def cmd_sample(args) -> int:
    spec = _spec(args)
    if args.seed is None:
        raise UsageError("--seed is required for sampling")
    pi = process.monte_carlo(spec, args.depth, args.samples, args.seed, _workers(args))
    if args.format == "csv":
        rows = [(pi.key(int(f)), float(p)) for f, p in zip(pi.ids, pi.probs)]
        _emit(args, _dump_csv(["fn", "p"], rows))
        return EXIT_OK
    data = {"seed": args.seed, "samples": args.samples, "depth": args.depth,
            "distribution": pi.to_json(), "marginals": pi.marginals().tolist()}
    if args.emit_formula:
        data["formula"] = process.formula_text(spec, args.depth, args.seed, 0)
    _emit(args, _dump_json(data))
    return EXIT_OK


def _read_distributions(path: str) -> list:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ValueError(f"cannot read {path}: {exc}") from exc
    if isinstance(data, dict) and "distribution" in data:
        data = data["distribution"]
    items = data if isinstance(data, list) else [data]
    return [process.Distribution.from_json(d) for d in items]


def cmd_spectrum(args) -> int:
    if args.input:
        dists = _read_distributions(args.input)
    else:
        dists = list(process.iterates(_spec(args), args.steps, _workers(args)))
    spectra = [spectrum.transform(pi) for pi in dists]
    if args.format == "csv":
        rows = [(s.iteration, s.max_nonzero()) for s in spectra]
        _emit(args, _dump_csv(["iteration", "max_abs_delta"], rows))
    else:
        _emit(args, _dump_json([s.to_json() for s in spectra]))
    return EXIT_OK


def cmd_bounds(args) -> int:
    spec = _spec(args)
    eps = args.epsilon if args.epsilon is not None else 2.0**-spec.n
    data = {"n": spec.n, "connective": spec.alpha.to_json(), "support": spec.support.label(),
            "epsilon": eps, "iterations": analysis.theoretical_iterations(spec, eps).to_json()}
    if spectral_profile(spec.alpha).balanced_nonlinear():
        c = eps if 0 < eps < 1 else None
        data["bound_constants"] = spectrum.bound_constants(spec.alpha, spec.n).to_json(c)
    _emit(args, _dump_json(data))
    return EXIT_OK


def cmd_verify(args) -> int:
    results = analysis.verify_all(args.kmax, args.nmax, args.sample_k5, args.seed or 0)
    _emit(args, _dump_json([r.to_json() for r in results]))
    if args.ci and not all(r.passed for r in results):
        return EXIT_VERIFY
    return EXIT_OK


def cmd_converge(args) -> int:
    spec = _spec(args)
    report = analysis.empirical_convergence(spec, args.epsilon, args.max_i, _workers(args))
    if args.format == "csv":
        bound = report.bound.value
        rows = [(i, d, "" if bound is None else float(bound)) for i, d in enumerate(report.trajectory)]
        _emit(args, _dump_csv(["i", "distance", "bound"], rows))
    else:
        _emit(args, _dump_json(report.to_json()))
    return EXIT_OK


# -- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="boolgrow", description="Random Boolean formula growth processes.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, process_args=True, fmt=True):
        p.add_argument("--connective", required=True,
                       help="preset name, inline JSON, or JSON file")
        if process_args:
            p.add_argument("--n", type=int, help="number of variables")
            p.add_argument("--support", default="proj",
                           help="comma list from proj,neg,const0,const1 (proj always on)")
            p.add_argument("--threads", type=int, default=None,
                           help="worker threads (default: BOOLGROW_THREADS or CPU count)")
        if fmt:
            p.add_argument("--format", choices=("json", "csv"), default="json")
        p.add_argument("--out", help="write output here instead of stdout")

    p = sub.add_parser("classify", help="properties, amplification polynomial, fixed point")
    common(p, process_args=False, fmt=False)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("predict", help="predicted limiting distribution")
    common(p, fmt=False)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("iterate", help="exact distribution snapshots")
    common(p)
    p.add_argument("--steps", type=int, default=20)
    p.add_argument("--every", type=int, default=1)
    p.set_defaults(func=cmd_iterate)

    p = sub.add_parser("sample", help="Monte Carlo distribution of random formulas")
    common(p)
    p.add_argument("--depth", type=int, required=True)
    p.add_argument("--samples", type=int, default=10**5)
    p.add_argument("--seed", type=int)
    p.add_argument("--emit-formula", action="store_true", help="include the full tree of sample 0")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("spectrum", help="Walsh-Hadamard spectra of a run or a saved distribution")
    p.add_argument("--input", help="distribution JSON written by iterate or sample")
    p.add_argument("--connective")
    p.add_argument("--n", type=int)
    p.add_argument("--support", default="proj")
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--steps", type=int, default=20)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("bounds", help="theoretical iteration counts and bound constants")
    common(p, fmt=False)
    p.add_argument("--epsilon", type=float)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("verify", help="lemma suite and prediction cross-checks")
    p.add_argument("--kmax", type=int, default=4)
    p.add_argument("--nmax", type=int, default=2)
    p.add_argument("--sample-k5", type=int, default=0, help="monotone arity-5 connectives to sample")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--ci", action="store_true", help="exit 3 when any check fails")
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("converge", help="measured distance to the predicted limit")
    common(p)
    p.add_argument("--epsilon", type=float, default=1e-6)
    p.add_argument("--max-i", type=int, default=60)
    p.set_defaults(func=cmd_converge)
    return parser


def _validate(args) -> None:
    if args.command == "spectrum":
        if bool(args.input) == bool(args.connective):
            raise UsageError("spectrum needs exactly one of --input or --connective")
    if args.command == "verify" and not (1 <= args.kmax <= 4 and 1 <= args.nmax <= 3):
        raise UsageError("verify needs 1 <= --kmax <= 4 and 1 <= --nmax <= 3")
    if getattr(args, "threads", None) is not None and args.threads < 1:
        raise UsageError("--threads must be >= 1")
    for name in ("steps", "depth", "max_i", "samples"):
        if getattr(args, name, 0) is not None and getattr(args, name, 0) < 0:
            raise UsageError(f"--{name.replace('_', '-')} must be >= 0")


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _validate(args)
        if getattr(args, "threads", None) is None and os.environ.get("BOOLGROW_THREADS"):
            process.default_workers()  # reject a malformed env value early
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            status = args.func(args)
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
        return status
    except (process.BudgetExceeded, OverflowError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (UsageError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MALFORMED


if __name__ == "__main__":
    sys.exit(main())
