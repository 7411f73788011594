import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from boolgrow import analysis, spectrum
from boolgrow.boolfn import TruthTable, chi, eta, kappa, upsilon
from boolgrow.connective import Connective, preset
from boolgrow.process import (
    BudgetExceeded,
    Distribution,
    ProcessSpec,
    SupportSpec,
    iterates,
    step_exact,
)


@st.composite
def distributions(draw, domain="general", max_n=3):
    n = draw(st.integers(1, max_n))
    space = 1 << (n + 1) if domain == "linear" else 1 << (1 << n)
    ids = sorted(draw(st.lists(st.integers(0, space - 1), min_size=1, max_size=12, unique=True)))
    w = draw(st.lists(st.floats(0.01, 1.0), min_size=len(ids), max_size=len(ids)))
    p = np.array(w) / sum(w)
    return Distribution(domain, n, np.array(ids, dtype=np.int64), p)


@given(distributions())
def test_fast_transform_matches_naive(pi):
    assert np.allclose(spectrum.transform(pi).values, spectrum.naive_transform(pi).values, atol=1e-14)


@given(st.sampled_from(["general", "linear"]).flatmap(lambda d: distributions(d)))
def test_round_trip(pi):
    back = spectrum.inverse(spectrum.transform(pi))
    assert np.max(np.abs(back.dense() - pi.dense())) <= 1e-12


def test_delta_at_zero_is_total_mass():
    pi = Distribution("general", 2, np.array([3, 5]), np.array([0.25, 0.75]))
    assert spectrum.transform(pi)[0] == 1.0


@settings(deadline=None)
@given(distributions("linear", max_n=4), st.integers(2, 3), st.integers(0, 1))
def test_linear_commutation(pi, k, c):
    lhs = spectrum.transform(step_exact(pi, Connective.linear(k, c)))
    rhs = spectrum.linear_step(spectrum.transform(pi), c, k)
    assert np.max(np.abs(lhs.values - rhs.values)) <= 1e-12


def test_linear_step_needs_linear_domain():
    pi = Distribution("general", 1, np.array([1]), np.array([1.0]))
    with pytest.raises(ValueError):
        spectrum.linear_step(spectrum.transform(pi), 0, 2)


@pytest.mark.parametrize("n", [2, 4])
def test_slice_formula_overlap_reading_is_exact(n):
    ids = analysis.materialize(analysis.SetDescriptor("slice", (n // 2,)), n)
    got = spectrum.transform(Distribution("general", n, ids, np.full(ids.size, 1 / ids.size)))
    assert np.array_equal(got.values, spectrum.slice_spectrum(n, "overlap").values)
    assert not np.array_equal(got.values, spectrum.slice_spectrum(n, "parity").values)


def test_slice_spectrum_errors():
    with pytest.raises(ValueError):
        spectrum.slice_spectrum(3)
    with pytest.raises(ValueError):
        spectrum.slice_spectrum(2, "other")


def test_restriction_residual_slice_process():
    spec = ProcessSpec(SupportSpec(2, const0=True, const1=True), preset("maj3"))
    res = [spectrum.restriction_residual(spectrum.transform(pi), chi(2), upsilon(2)) for pi in iterates(spec, 20)]
    assert res[20] <= 1e-6
    assert all(b <= a for a, b in zip(res[5:], res[6:]))


def test_restriction_residual_bi_preserving_process():
    spec = ProcessSpec(SupportSpec(2), preset("mux"))
    pis = list(iterates(spec, 30))
    res = spectrum.restriction_residual(spectrum.transform(pis[-1]), kappa(2), eta(2))
    assert res <= 1e-9


def _perturbed(rng, n):
    p = rng.random(1 << (1 << n))
    return Distribution("general", n, np.arange(p.size), p / p.sum())


@pytest.mark.parametrize("name", ["maj3", "mux", "valiant4", "xor2"])
def test_savicky_matches_brute_force_step(name):
    rng = np.random.default_rng(3)
    alpha = preset(name)
    pi = _perturbed(rng, 2)
    truth = spectrum.transform(step_exact(pi, alpha))
    for w in range(16):
        got = spectrum.savicky_predict(pi, alpha, TruthTable(2, w))
        assert got == pytest.approx(truth[w], abs=1e-9)


def test_savicky_budget():
    pi = Distribution("general", 3, np.array([0]), np.array([1.0]))
    with pytest.raises(BudgetExceeded):
        spectrum.savicky_predict(pi, preset("valiant4"), TruthTable(3, 0xFF))


def test_bound_constants_majority():
    bc = spectrum.bound_constants(preset("maj3"), 2)
    assert bc.a == pytest.approx(0.5, abs=1e-12)
    assert bc.i_d(2) == pytest.approx(16)
    assert bc.i_d(3) == pytest.approx(16 + 64 * 3)
    assert bc.I == pytest.approx(16 + 16 * 4**4)
    assert bc.envelope(16, 2) == pytest.approx(1.0)
    assert math.isinf(bc.envelope(10, 3))


def _linear_scan(bc, c):
    i = math.ceil(bc.I)
    while bc.savbounds_gap(i, c) < 0:
        i += 1
    return i


@pytest.mark.parametrize("c", [0.5, 0.1, 1e-3])
def test_savbounds_solver_matches_linear_scan(c):
    bc = spectrum.bound_constants(preset("maj3"), 2)
    assert bc.solve_savbounds(c) == _linear_scan(bc, c)


def test_savbounds_known_value():
    assert spectrum.bound_constants(preset("maj3"), 2).solve_savbounds(0.1) == 7067


def test_bound_constants_reject_unbalanced():
    with pytest.raises(ValueError):
        spectrum.bound_constants(preset("and2"), 2)
    with pytest.raises(ValueError):
        spectrum.bound_constants(preset("maj3"), 2).solve_savbounds(1.5)


def test_transform_caps():
    pi = Distribution("general", 5, np.array([0]), np.array([1.0]))
    with pytest.raises(BudgetExceeded):
        spectrum.transform(pi)


def test_spectrum_json():
    pi = Distribution("general", 1, np.array([1, 2]), np.array([0.5, 0.5]))
    data = spectrum.transform(pi).to_json()
    assert [e["delta"] for e in data["entries"]] == [1.0, 0.0, 0.0, -1.0]
