from collections import Counter
from fractions import Fraction as F
from itertools import product

import pytest
from hypothesis import given
from hypothesis import strategies as st

import exchkit.multiclass as mc
from exchkit.catalog import AB, coupled_binary_system, iter_small_specs, mixed_member, point, polya_black_box
from exchkit.errors import BlackBoxLaw, EmptyTuple, MissingDirectingMeasure, NotMultiExchangeable, TooLargeToEnumerate
from exchkit.measures import DiscreteMeasure, from_probabilities, product_measure, tensor_power, uniform
from exchkit.multiclass import (
    ClassSpec,
    SystemRealization,
    SystemSpec,
    check_multi_exchangeability,
    conditional_resample,
    empirical_measure,
    estimate_directing_measure,
    joint_law_exact,
    measure_vector,
    verify_sufficiency,
    verify_sufficiency_mc,
)
from exchkit.sampling import MixtureModel, RngStream

SMALL = list(iter_small_specs())
FIN2 = ClassSpec.finite(2, AB)
SWAP = uniform([("a", "b"), ("b", "a")])


def realization(*blocks, directing=None):
    directing = directing or (None,) * len(blocks)
    return SystemRealization(tuple(blocks), tuple(q is not None for q in directing), tuple(directing))


def test_empirical_measure_examples():
    assert dict(empirical_measure(("a", "a", "b")).weights) == {("a",): F(2, 3), ("b",): F(1, 3)}
    assert empirical_measure(("a",)) == point("a")
    assert empirical_measure(("b", "a", "a")) == empirical_measure(("a", "a", "b"))
    with pytest.raises(EmptyTuple):
        empirical_measure(())


def test_estimate_directing_measure_examples():
    assert estimate_directing_measure(("a",) * 10, 3) == (point("a"), F(6, 10))
    _, bound = estimate_directing_measure(("a", "b") * 50, 3)
    assert bound == F(6, 100)
    assert estimate_directing_measure(("b",), 1) == (point("b"), 0)
    with pytest.raises(EmptyTuple):
        estimate_directing_measure((), 2)


def test_measure_vector_examples():
    assert tuple(measure_vector(realization(("a", "b")))) == (uniform([("a",), ("b",)]),)
    r = SystemRealization((("a", "a"), ("b", "b", "a")), (False, True), (None, point("b")))
    assert tuple(measure_vector(r)) == (point("a"), point("b"))
    r = SystemRealization((("a", "b", "b", "b"),), (True,), (None,))
    assert tuple(measure_vector(r)) == (from_probabilities({"a": F(1, 4), "b": F(3, 4)}),)


def test_conditional_resample_examples():
    rng = RngStream(3)
    outs = Counter(conditional_resample(realization(("x", "y")), rng.child(i)).blocks[0] for i in range(4000))
    assert set(outs) == {("x", "y"), ("y", "x")}
    assert abs(outs[("x", "y")] / 4000 - 0.5) < 0.05
    assert all(conditional_resample(realization(("a", "a")), rng.child(i)).blocks[0] == ("a", "a") for i in range(50))
    q = from_probabilities({"a": F(2, 3), "b": F(1, 3)})
    r = SystemRealization((("a", "a"),), (True,), (q,))
    pairs = Counter(conditional_resample(r, rng.child(10**6 + i)).blocks[0] for i in range(9000))
    for t, w in tensor_power(q, 2).items():
        assert abs(pairs[t] / 9000 - float(w)) < 0.03


def test_conditional_resample_needs_directing():
    r = SystemRealization((("a", "b"),), (True,), (None,))
    with pytest.raises(MissingDirectingMeasure):
        conditional_resample(r, RngStream(1))
    out = conditional_resample(r, RngStream(1), estimate_missing=True)
    assert out.directing[0] == uniform([("a",), ("b",)])


def test_joint_law_examples():
    assert joint_law_exact(SystemSpec.independent([FIN2], [SWAP])) == SWAP
    m = MixtureModel(((point("a"), F(1, 2)), (point("b"), F(1, 2))))
    law = joint_law_exact(SystemSpec.independent([ClassSpec.infinite(AB, 2)], [m]))
    assert dict(law.weights) == {("a", "a"): F(1, 2), ("b", "b"): F(1, 2)}
    p = from_probabilities({"a": F(1, 3), "b": F(2, 3)})
    spec = SystemSpec.independent([FIN2, ClassSpec.infinite(AB, 1)], [SWAP, MixtureModel.point(p)])
    assert joint_law_exact(spec) == product_measure(SWAP, p)


def test_joint_law_of_mixture_matches_oracle():
    # brute force: sum over latent component and every outcome of its product law
    spec = mixed_member(F(2, 5), truncation=2)
    expect: dict = {}
    for comp in spec.components:
        for x, w in comp.finite_law.items():
            for y in product(AB, repeat=2):
                p = comp.weight * w * comp.directing[0][y[0]] * comp.directing[0][y[1]]
                if p:
                    expect[x + y] = expect.get(x + y, 0) + p
    assert dict(joint_law_exact(spec).weights) == expect


def test_joint_law_guard_and_black_box():
    big = SystemSpec.independent([ClassSpec.infinite(tuple("abcdefgh"), 9)], [uniform([(a,) for a in "abcdefgh"])])
    with pytest.raises(TooLargeToEnumerate):
        joint_law_exact(big)
    with pytest.raises(BlackBoxLaw):
        joint_law_exact(polya_black_box())


def test_multi_exchangeability_examples():
    iid = SystemSpec.independent([FIN2], [tensor_power(from_probabilities({"a": F(1, 3), "b": F(2, 3)}), 2)])
    assert check_multi_exchangeability(joint_law_exact(iid), iid)
    ordered = SystemSpec.independent([FIN2], [DiscreteMeasure.point_mass(("a", "b"))])
    assert not check_multi_exchangeability(joint_law_exact(ordered), ordered)
    mix = MixtureModel.of([({"a": "1/4", "b": "3/4"}, "1/2"), ({"a": "2/3", "b": "1/3"}, "1/2")])
    spec = SystemSpec.independent([ClassSpec.finite(3, AB)], [mix])
    assert check_multi_exchangeability(joint_law_exact(spec), spec)


def test_swap_across_classes_is_not_required():
    # exchangeable within classes, not under swapping a coordinate between classes
    spec = SystemSpec.independent([ClassSpec.finite(1, AB), ClassSpec.finite(1, AB)], [point("a"), point("b")])
    assert check_multi_exchangeability(joint_law_exact(spec), spec)
    assert verify_sufficiency(spec).passed


def test_sufficiency_examples():
    rep = verify_sufficiency(SystemSpec.independent([FIN2, FIN2], [SWAP, tensor_power(point("a"), 2)]))
    assert rep.passed and not rep.unconditionally_coupled
    rep = verify_sufficiency(coupled_binary_system())
    assert rep.passed and rep.unconditionally_coupled
    assert rep.n_outcomes <= 16
    with pytest.raises(NotMultiExchangeable):
        verify_sufficiency(SystemSpec.independent([FIN2], [DiscreteMeasure.point_mass(("a", "b"))]))


def test_latent_check_catches_prefix_blind_spot():
    # the truncated joint law is exchangeable, but given q1 the finite class is
    # ordered: (q1 + q2)/2 and q3 look identical through a length-1 prefix
    q1 = from_probabilities({"a": F(1, 3), "b": F(2, 3)})
    q2 = from_probabilities({"a": F(2, 3), "b": F(1, 3)})
    q3 = from_probabilities({"a": F(1, 2), "b": F(1, 2)})
    ab, ba = DiscreteMeasure.point_mass(("a", "b")), DiscreteMeasure.point_mass(("b", "a"))
    spec = SystemSpec.coupled(
        [FIN2, ClassSpec.infinite(AB, 1)],
        [(F(1, 4), [ab, q1]), (F(1, 4), [ab, q2]), (F(1, 2), [ba, q3])],
    )
    assert check_multi_exchangeability(joint_law_exact(spec), spec)
    assert not mc.check_latent_exchangeability(spec)
    with pytest.raises(NotMultiExchangeable):
        verify_sufficiency(spec)


@pytest.mark.parametrize("name,spec", SMALL, ids=[n for n, _ in SMALL])
def test_small_grid_sufficiency(name, spec):
    rep = verify_sufficiency(spec)
    assert rep.law_preserved and rep.conditional_matches_kernel and rep.factorizes
    assert rep.max_deviation == 0


def test_grid_contains_coupled_specs():
    assert any(verify_sufficiency(s).unconditionally_coupled for _, s in SMALL)


def test_wrong_kernel_is_detected(monkeypatch):
    # negative control: resample finite classes i.i.d. from their empirical measure
    def iid_kernel(v, spec, truncation=None):
        return product_measure(*(tensor_power(mu, c.length(truncation)) for c, mu in zip(spec.classes, v)))

    monkeypatch.setattr(mc, "resample_kernel", iid_kernel)
    spec = SystemSpec.independent([FIN2], [SWAP])
    rep = mc.verify_sufficiency(spec)
    assert not rep.law_preserved and not rep.conditional_matches_kernel


@given(st.sampled_from(SMALL), st.integers(0, 2**32))
def test_resample_fixes_measure_vector(named, seed):
    _, spec = named
    rng = RngStream(seed)
    r = spec.sample(rng.child(0))
    r2 = conditional_resample(r, rng.child(1))
    assert measure_vector(r2) == measure_vector(r)
    for blk, blk2, inf in zip(r.blocks, r2.blocks, r.infinite):
        if not inf:
            assert sorted(blk) == sorted(blk2)


@given(st.sampled_from(SMALL), st.integers(0, 2**32))
def test_samples_lie_in_support(named, seed):
    _, spec = named
    r = spec.sample(RngStream(seed))
    assert joint_law_exact(spec)[r.flat()] > 0


def test_sampler_matches_exact_law():
    from scipy.stats import chisquare

    spec = coupled_binary_system()
    law = joint_law_exact(spec)
    rng = RngStream(99)
    n = 40000
    counts = Counter(spec.sample(rng).flat() for _ in range(n))
    assert set(counts) <= set(law.support)
    assert chisquare([counts[t] for t in law.support], [float(w) * n for w in law.weights.values()]).pvalue > 1e-3


def test_mc_shadow_small():
    rep = verify_sufficiency_mc(coupled_binary_system(), reps=4000, seed=5)
    assert rep.passed and rep.measure_vector_preserved
    assert all(row.stderr >= 0 for row in rep.rows)


def test_mc_shadow_thread_invariant():
    a = verify_sufficiency_mc(polya_black_box(), reps=800, seed=8, threads=1)
    b = verify_sufficiency_mc(polya_black_box(), reps=800, seed=8, threads=4)
    assert a == b


def test_mc_shadow_flags_broken_resampler(monkeypatch):
    # resampling the finite class to a fixed sorted order breaks the law
    def sorted_resample(r, streams, estimate_missing=False):
        return SystemRealization(tuple(tuple(sorted(b)) for b in r.blocks), r.infinite, r.directing)

    monkeypatch.setattr(mc, "_resample", sorted_resample)
    rep = mc.verify_sufficiency_mc(SystemSpec.independent([FIN2], [SWAP]), reps=2000, seed=1)
    assert not rep.passed


def test_spec_validation():
    with pytest.raises(ValueError):
        SystemSpec.coupled([FIN2], [(F(1), [from_probabilities({"a": 1}), point("b")])])
    with pytest.raises(ValueError):
        ClassSpec.finite(0, AB)
    spec = mixed_member(F(1, 3), truncation=2)
    assert spec.with_truncation(4).block_lengths() == [2, 4]
