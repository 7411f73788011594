import pytest

from boolgrow import analysis
from boolgrow.boolfn import TruthTable, is_monotone
from boolgrow.connective import CharPoly, char_poly, preset
from boolgrow.process import ProcessSpec, SupportSpec


@pytest.fixture(scope="module")
def monotone4():
    return analysis.monotone_population(4)


def test_monotone_counts():
    assert [len(analysis.monotone_tables(k)) for k in range(6)] == [2, 3, 6, 20, 168, 7581]


def test_monotone_tables_are_monotone():
    assert all(is_monotone(TruthTable(4, b)) for b in analysis.monotone_tables(4))


@pytest.mark.parametrize("lemma", analysis.LEMMAS)
def test_lemma_passes_on_monotone_population(lemma, monotone4):
    res = analysis.verify_lemma(lemma, monotone4)
    assert res.passed, res.witness
    assert res.checked > 0


def test_minslope_majority_equality():
    pop = analysis.ConnectiveSet("MAJ3", (preset("maj3"),))
    res = analysis.verify_lemma("MinSlope", pop)
    assert res.passed and abs(res.worst_margin) <= 1e-12


def test_bal_over_all_small_connectives():
    res = analysis.verify_lemma("Bal", analysis.all_population(3))
    assert res.passed and res.checked == 4 + 16 + 256


def test_equiv_denominator_scan_flags_rational_fixed_points():
    pop = analysis.ConnectiveSet("valiant4", (preset("valiant4"),))
    res = analysis.verify_lemma("Equiv", pop, denominator_bound=50)
    assert res.passed and res.worst_margin > 1e-6


def _shifted(shift):
    def cp(alpha):
        A = char_poly(alpha)
        if alpha.k < 2:
            return A
        counts = list(A.counts)
        counts[1] = counts[1] + shift
        return CharPoly(A.k, tuple(counts))

    return cp


@pytest.mark.parametrize("lemma", ["Bal", "MinSlope", "Triv"])
def test_failure_injection_reports_witness(lemma):
    pop = analysis.ConnectiveSet("MAJ3 and AND3", (preset("maj3"), preset("and3")))
    if lemma == "MinSlope":
        # a flatter polynomial crossing at 1/2 with slope 1.25 < 1.5
        def cp(alpha):
            return CharPoly(4, (0, 0, 4, 3, 1)) if alpha.table == preset("maj3").table else char_poly(alpha)
    elif lemma == "Triv":
        # starts like 6 p^2, above the 4 p^2 bound for arity 3
        def cp(alpha):
            return CharPoly(4, (0, 0, 6, 4, 1)) if alpha.table == preset("and3").table else char_poly(alpha)
    else:
        cp = _shifted(1)
    res = analysis.verify_lemma(lemma, pop, char_poly_fn=cp)
    assert not res.passed
    assert res.witness


def test_fourier_slice_checks():
    for n in (2, 4):
        res = analysis.verify_lemma("FourierSlice", n=n)
        assert res.passed


def test_restriction_and_savicky_checks():
    spec = ProcessSpec(SupportSpec(2, const0=True, const1=True), preset("maj3"))
    assert analysis.verify_lemma("Restriction", spec=spec, i_max=20).passed
    assert analysis.verify_lemma("SavickyRecurrence", spec=spec).passed


def test_unknown_lemma():
    with pytest.raises(ValueError):
        analysis.verify_lemma("Nope")


def test_verify_all_small():
    results = analysis.verify_all(2, 2)
    assert results and all(r.passed for r in results)
    assert {r.lemma for r in results} >= set(analysis.LEMMAS) | {"FourierSlice", "Restriction", "Prediction"}
    for r in results:
        data = r.to_json()
        assert set(data) >= {"lemma", "population", "pass", "worst_margin", "witness"}


def test_sampled_arity_five_population_is_reproducible():
    a = analysis.monotone_population(4, sample_k5=50, seed=3)
    b = analysis.monotone_population(4, sample_k5=50, seed=3)
    assert [c.table for c in a.members] == [c.table for c in b.members]
    assert sum(c.k == 5 for c in a.members) == 50
