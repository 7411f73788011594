import math

import numpy as np
import pytest

from boolgrow import analysis
from boolgrow.analysis import SetDescriptor, predict
from boolgrow.boolfn import threshold
from boolgrow.connective import Connective, char_poly, preset
from boolgrow.process import ProcessSpec, SupportSpec, initial_marginals, iterate_exact


def _spec(n, support, name):
    alpha = name if isinstance(name, Connective) else preset(name)
    return ProcessSpec(SupportSpec.parse(n, support), alpha)


@pytest.mark.parametrize(
    "n, support, name, expected",
    [
        (3, "proj", "maj3", "Concentrated(Threshold(2))"),
        (2, "proj,const0,const1", "maj3", "UniformOnSet(Slice(1))"),
        (2, "proj,neg", "maj3", "UniformOnSet(SelfDual)"),
        (2, "proj", "mux", "UniformOnSet(BiPreserving)"),
        (2, "proj,neg,const0,const1", "maj3", "UniformOnSet(AllFunctions)"),
        (4, "proj", "maj3", "UniformOnSet(SelfDualSlice)"),
        (4, "proj,const0,const1", "maj3", "UniformOnSet(Slice(2))"),
        (3, "proj", "and2", "Concentrated(Threshold(3))"),
        (3, "proj,const0", "and2", "Concentrated(Threshold(4))"),
        (3, "proj,const1", "or2", "Concentrated(Threshold(0))"),
        (4, "proj,const0", "maj3", "Concentrated(Threshold(3))"),
        (4, "proj,const1", "maj3", "Concentrated(Threshold(2))"),
        (3, "proj,neg,const0,const1", "xor3", "UniformOnSet(AllLinear)"),
        (3, "proj,neg", "xor3", "UniformOnSet(LinearConstrained(parity=1))"),
    ],
)
def test_predict_examples(n, support, name, expected):
    assert str(predict(_spec(n, support, name))) == expected


def test_predict_alternating_linear():
    pred = predict(_spec(2, "proj", "xnor3"))
    assert pred.kind == "alternating"
    even = analysis.materialize(pred.descriptor, 2, "linear")
    odd = analysis.materialize(pred.odd, 2, "linear")
    assert set(even.tolist()).isdisjoint(odd.tolist())


def test_unbalanced_monotone_threshold_level():
    # fixed point t of (x1 x2) v (x3 x4) is about 0.618, so ceil(t n) at n = 4 is 3
    pred = predict(_spec(4, "proj", "valiant4"))
    assert str(pred) == "Concentrated(Threshold(3))"


def test_degenerate_and_unknown():
    ignores = Connective.from_callable(3, lambda a, b, c: a & b)
    assert predict(_spec(2, "proj", ignores)).kind == "degenerate"
    assert predict(_spec(2, "proj", Connective.from_callable(1, lambda a: a))).kind == "degenerate"
    assert predict(_spec(2, "proj,neg", "and2")).kind == "unknown"
    assert predict(_spec(2, "proj,const0", "mux")).kind == "unknown"


def test_selection_connective_keeps_marginals_beyond_two_variables():
    spec = _spec(3, "proj", "mux")
    assert predict(spec).kind == "unknown"
    assert char_poly(spec.alpha).is_identity()
    pi = iterate_exact(spec, 30)
    assert np.allclose(pi.marginals(), initial_marginals(spec))


@pytest.mark.parametrize("n", [2, 4])
def test_counting(n):
    c = math.comb(n, n // 2)
    assert analysis.materialize(SetDescriptor("slice", (n // 2,)), n).size == 2**c
    assert analysis.materialize(SetDescriptor("self_dual_slice"), n).size == 2 ** (c // 2)


def test_limit_distribution_examples():
    lim = analysis.limit_distribution(predict(_spec(2, "proj,const0,const1", "maj3")), _spec(2, "proj,const0,const1", "maj3"))
    assert lim.ids.size == 4 and np.all(lim.probs == 0.25)
    spec = _spec(2, "proj,neg", "maj3")
    lim = analysis.limit_distribution(predict(spec), spec)
    # self-dual: f(~x) = ~f(x), and ~x reverses the assignment index
    brute = [f for f in range(16) if all(((f >> a) & 1) != ((f >> (3 - a)) & 1) for a in range(4))]
    assert lim.ids.tolist() == brute
    spec = _spec(3, "proj", "maj3")
    lim = analysis.limit_distribution(predict(spec), spec)
    assert lim.ids.tolist() == [threshold(3, 2).bits] and lim.probs.tolist() == [1.0]
    with pytest.raises(ValueError):
        analysis.limit_distribution(predict(_spec(2, "proj,neg", "and2")), _spec(2, "proj,neg", "and2"))


def test_theoretical_iterations_examples():
    lin = analysis.theoretical_iterations(_spec(4, "proj,const0,const1", "xor2"), 2**-4)
    assert (lin.tag, lin.value, lin.has_unknown_constant) == ("linear", 4.0, False)
    fp = analysis.theoretical_iterations(_spec(2, "proj,const0,const1", "maj3"))
    assert fp.tag == "bound-fp" and fp.value == pytest.approx(24.0) and fp.has_unknown_constant
    slow = analysis.theoretical_iterations(_spec(8, "proj", "slow3"))
    assert slow.tag == "slow" and slow.value == pytest.approx(8 / 2 * 3) and slow.has_unknown_constant
    fast = analysis.theoretical_iterations(_spec(8, "proj", "and3"))
    assert fast.tag == "fast" and fast.value == pytest.approx(9.0)
    sav = analysis.theoretical_iterations(_spec(2, "proj,neg,const0,const1", "maj3"), 0.1)
    assert (sav.tag, sav.value) == ("savbounds", 7067.0)
    assert analysis.theoretical_iterations(_spec(2, "proj,neg", "and2")).tag == "none"


def test_empirical_convergence_examples():
    spec = _spec(4, "proj,const0,const1", "xor2")
    report = analysis.empirical_convergence(spec, 2**-4, 10)
    assert report.converged and report.iterations_measured <= 4
    assert report.trajectory[report.iterations_measured] < 2**-4
    assert all(d >= 2**-4 for d in report.trajectory[: report.iterations_measured])
    assert analysis.empirical_convergence(spec, 1.1, 5).iterations_measured == 0
    slice_spec = _spec(2, "proj,const0,const1", "maj3")
    report = analysis.empirical_convergence(slice_spec, 1e-3, 12)
    assert analysis.log_linear_slope(report.trajectory[:8]) < 0


def test_empirical_convergence_not_converged_flag():
    report = analysis.empirical_convergence(_spec(2, "proj,neg,const0,const1", "maj3"), 1e-12, 5)
    assert not report.converged and report.iterations_measured is None
    assert len(report.trajectory) == 6


def test_alternating_convergence_tracks_parity():
    report = analysis.empirical_convergence(_spec(3, "proj", "xnor3"), 1e-9, 8)
    assert report.converged


@pytest.mark.parametrize("n", range(2, 9))
@pytest.mark.parametrize("k", [2, 3])
def test_linear_bound_is_absolute(n, k):
    bound = math.ceil(2 * math.log(n) / math.log(k)) + 1
    for c in (0, 1):
        for support in ("proj", "proj,const0", "proj,const1", "proj,const0,const1", "proj,neg",
                        "proj,neg,const0,const1"):
            report = analysis.empirical_convergence(_spec(n, support, Connective.linear(k, c)), 2.0**-n, bound)
            assert report.trajectory[bound] < 2.0**-n


@pytest.mark.parametrize("spec", analysis._cross_check_specs(3), ids=lambda s: f"n{s.n}-{s.alpha.name}-{s.support.label()}")
def test_prediction_consistency(spec):
    res = analysis.check_prediction(spec)
    if res is not None:
        assert res.passed, res.witness


def test_scalar_exit_iterations_grow_with_n():
    A = char_poly(preset("slow3"))
    counts = [analysis.scalar_exit_iterations(A, 1 - 1 / n, 0.01) for n in (8, 16, 32)]
    assert counts == sorted(counts) and all(c >= n for c, n in zip(counts, (8, 16, 32)))


def test_prediction_json():
    data = predict(_spec(2, "proj", "xnor3")).to_json()
    assert data["kind"] == "alternating" and "even" in data and "odd" in data
