from fractions import Fraction as F

import pytest

import exchkit.convergence as cv
from exchkit.catalog import AB, mixed_member, mixture_family, perturbed_family, point, polya_black_box
from exchkit.convergence import (
    CONTRADICTS,
    LIMIT,
    SUPPORTS,
    Estimate,
    SystemFamily,
    convergence_report,
    fdd_moment,
    fdd_polynomial,
    indicator_tests,
    vector_battery,
    vector_law,
    vector_moment,
)
from exchkit.errors import BlackBoxLaw, InconsistentFamily
from exchkit.measures import DiscreteMeasure, uniform
from exchkit.multiclass import ClassSpec, SystemSpec, joint_law_exact
from exchkit.sampling import MixtureModel

SWAP = uniform([("a", "b"), ("b", "a")])
FIN2 = ClassSpec.finite(2, AB)


def one(_):
    return 1


def delta_mixture(wa):
    return MixtureModel(((point("a"), wa), (point("b"), 1 - wa)))


def test_fdd_moment_examples():
    spec = SystemSpec.independent([FIN2], [SWAP])
    assert fdd_moment(spec, [one], 2) == 1
    assert fdd_moment(spec, [lambda t: int(t[0] == "a")], 2) == F(1, 2)
    inf = SystemSpec.independent([ClassSpec.infinite(AB, 2)], [delta_mixture(F(1, 2))])
    assert fdd_moment(inf, [lambda t: int(t == ("a", "a"))], 2) == F(1, 2)


def test_vector_moment_examples():
    spec = SystemSpec.independent([FIN2], [SWAP])
    assert vector_moment(spec, ()) == 1
    assert vector_moment(spec, (((0, "a"), 1),)) == F(1, 2)
    inf = SystemSpec.independent([ClassSpec.infinite(AB, 2)], [delta_mixture(F(1, 3))])
    assert vector_moment(inf, (((0, "a"), 2),)) == F(1, 3)
    assert vector_moment(inf, lambda v: v[0]["a"] ** 2) == F(1, 3)


def test_monte_carlo_moments_are_close():
    spec = mixed_member(F(1, 3))
    est = fdd_moment(spec, [lambda t: int(t[0] == "a"), lambda t: int(t[0] == "a")], 2, reps=20000, seed=4)
    assert isinstance(est, Estimate)
    exact = fdd_moment(spec, [lambda t: int(t[0] == "a"), lambda t: int(t[0] == "a")], 2)
    assert abs(est.value - float(exact)) < 4 * est.stderr + 1e-12
    est = vector_moment(spec, (((1, "a"), 1),), reps=20000, seed=4)
    assert abs(est.value - 1 / 3) < 4 * est.stderr


def test_black_box_needs_reps():
    with pytest.raises(BlackBoxLaw):
        fdd_moment(polya_black_box(), [one, one], 2)
    est = fdd_moment(polya_black_box(), [one, one], 2, reps=50, seed=1)
    assert est.value == 1 and est.stderr == 0


def test_vector_law_is_a_probability():
    law = vector_law(mixed_member(F(2, 7)))
    assert sum(law.values()) == 1


def test_fdd_polynomial_reproduces_moments():
    # E[indicator] equals E[P(measure vector)] for every test in the battery
    spec = mixed_member(F(2, 7), truncation=2)
    law = vector_law(spec)
    joint = joint_law_exact(spec, 2)
    for t in indicator_tests(spec, 2):
        poly = fdd_polynomial(spec, t, 2)
        via_vector = sum(w * poly.evaluate(lambda v, vec=v: vec[v[0]][v[1]]) for v, w in law.items())
        assert via_vector == joint[t[0] + t[1]]


def test_battery_sizes():
    spec = mixed_member(F(1, 2))
    assert len(indicator_tests(spec, 2)) == 4 * 4
    # 4 variables; monomials of degree 1..3
    assert len(vector_battery(spec, 3)) == 4 + 10 + 20


def test_constant_family_has_zero_gaps():
    spec = mixed_member(F(1, 3))
    fam = SystemFamily({1: spec, 2: spec, 4: spec, LIMIT: spec})
    rep = convergence_report(fam, k=2, degree=2, tolerance=1e-3)
    assert set(rep.fdd_gap.values()) == {0} and set(rep.vector_gap.values()) == {0}
    assert rep.verdict == {"vector_to_system": SUPPORTS, "system_to_vector": SUPPORTS}


def test_mixture_family_closed_forms():
    fam = mixture_family((1, 2, 4, 8))
    rep = convergence_report(fam, k=2, degree=3, tolerance=1e-2)
    for r in fam.grid:
        assert rep.vector_gap_by_monomial["L1(a)"][r] == F(1, 2 * r)
        assert rep.fdd_gap[r] <= rep.fdd_bound[r]
    assert rep.fdd_monotone and rep.vector_monotone
    assert rep.reconstruction_exact and rep.vector_as_fdd_exact and rep.transfer_bounds_hold
    assert rep.passed
    assert rep.rates["vector"] == pytest.approx(-1.0)


def test_perturbed_family_is_rejected():
    with pytest.raises(InconsistentFamily):
        convergence_report(perturbed_family())


def test_family_validation():
    with pytest.raises(InconsistentFamily):
        SystemFamily({1: mixed_member(F(1, 2))})
    with pytest.raises(InconsistentFamily):
        SystemFamily({-1: mixed_member(F(1, 2)), LIMIT: mixed_member(F(1, 2))})
    with pytest.raises(InconsistentFamily):
        SystemFamily({1: SystemSpec.independent([FIN2], [SWAP]), LIMIT: mixed_member(F(1, 2))})


def test_non_exchangeable_counterexample_contradicts(monkeypatch):
    # with the hypothesis check disabled, a fixed ordering bias that the measure
    # vector cannot see keeps the fdd gap away from 0 while vector gaps vanish
    monkeypatch.setattr(cv, "_check_family", lambda fam, k: None)
    limit = SystemSpec.independent([FIN2], [SWAP])
    biased = SystemSpec.independent([FIN2], [DiscreteMeasure.point_mass(("a", "b"))])
    fam = SystemFamily({1: biased, 2: biased, 4: biased, LIMIT: limit})
    rep = convergence_report(fam, k=2, degree=2, tolerance=1e-2)
    assert set(rep.vector_gap.values()) == {0}
    assert rep.fdd_gap[4] == F(1, 2)
    assert rep.verdict["vector_to_system"] == CONTRADICTS


def test_monte_carlo_report():
    fam = mixture_family((1, 4))
    rep = convergence_report(fam, k=2, degree=2, tolerance=5e-2, reps=3000, seed=7)
    assert not rep.exact and rep.stderr is not None
    assert set(rep.verdict.values()) == {SUPPORTS}
    again = convergence_report(fam, k=2, degree=2, tolerance=5e-2, reps=3000, seed=7)
    assert rep.to_json() == again.to_json()
