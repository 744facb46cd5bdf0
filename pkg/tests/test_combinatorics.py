from collections import Counter
from fractions import Fraction as F
from itertools import product
from math import comb, factorial, prod

import pytest
from hypothesis import given
from hypothesis import strategies as st

from exchkit.combinatorics import (
    Polynomial,
    Urn,
    check_equality_condition,
    decompose_product_power,
    falling_factorial,
    law_with_replacement,
    law_without_replacement,
    law_without_replacement_from_empirical,
    pattern_terms,
    reconstruct,
    tv_gap_bounds,
    urn_from_empirical,
    without_replacement_polynomials,
)
from exchkit.errors import KOutOfRange, TheoremViolation
from exchkit.measures import DiscreteMeasure, from_probabilities, tensor_power, tv_distance, uniform

from strategies import urns

AAB = Urn.parse("a,a,b")


def oracle_without(u: Urn, k: int) -> dict:
    """Closed-form multiset count: prod_a (n_a)_{m_a} / (N)_k for each y."""
    counts = Counter(u.points)
    out = {}
    for y in product(sorted(counts), repeat=k):
        m = Counter(y)
        num = prod(falling_factorial(counts[a], m[a]) if m[a] <= counts[a] else 0 for a in m)
        if num:
            out[y] = F(num, falling_factorial(u.N, k))
    return out


def oracle_with(u: Urn, k: int) -> dict:
    """Count all N^k index tuples directly."""
    out = Counter(tuple(u.points[i] for i in idx) for idx in product(range(u.N), repeat=k))
    return {y: F(c, u.N**k) for y, c in out.items()}


def test_falling_factorial_examples():
    assert falling_factorial(7, 1) == 7
    assert falling_factorial(5, 3) == 60
    assert falling_factorial(4, 4) == 24
    with pytest.raises(KOutOfRange):
        falling_factorial(3, 4)


def test_law_without_replacement_examples():
    assert law_without_replacement(Urn.parse("a,b"), 2) == uniform([("a", "b"), ("b", "a")])
    assert law_without_replacement(AAB, 2) == uniform([("a", "a"), ("a", "b"), ("b", "a")])
    assert law_without_replacement(AAB, 1) == AAB.empirical()
    with pytest.raises(KOutOfRange):
        law_without_replacement(AAB, 4)
    with pytest.raises(KOutOfRange):
        law_without_replacement(AAB, 0)


def test_law_with_replacement_examples():
    sq = law_with_replacement(AAB, 2)
    assert dict(sq.weights) == {("a", "a"): F(4, 9), ("a", "b"): F(2, 9), ("b", "a"): F(2, 9), ("b", "b"): F(1, 9)}
    assert law_with_replacement(Urn(("a",)), 4) == DiscreteMeasure.point_mass(("a",) * 4)
    assert law_with_replacement(Urn.parse("a,b"), 1) == uniform([("a",), ("b",)])


def test_decomposition_example():
    terms = decompose_product_power(AAB, 2)
    assert [c for c, _ in terms] == [F(1, 3), F(2, 3)]
    assert dict(terms[0][1].weights) == {("a", "a"): F(2, 3), ("b", "b"): F(1, 3)}
    assert terms[1][1] == law_without_replacement(AAB, 2)
    assert reconstruct(terms) == law_with_replacement(AAB, 2)


def test_decomposition_k1_single_term():
    u = Urn.parse("a,b,b,c")
    assert decompose_product_power(u, 1) == [(F(1), u.empirical())]


def test_decomposition_constant_urn():
    u = Urn(("a",) * 4)
    for c, t in decompose_product_power(u, 4):
        assert t == DiscreteMeasure.point_mass(("a",) * 4)
    assert reconstruct(decompose_product_power(u, 4)) == DiscreteMeasure.point_mass(("a",) * 4)


def stirling2(k, j):
    return sum((-1) ** i * comb(j, i) * (j - i) ** k for i in range(j + 1)) // factorial(j)


@pytest.mark.parametrize("N,k", [(n, k) for n in range(1, 6) for k in range(1, n + 1)])
def test_decomposition_coefficients_and_top_term(N, k):
    u = Urn(tuple("abc"[i % 3] for i in range(N)))
    terms = decompose_product_power(u, k)
    for j, (c, _) in enumerate(terms, start=1):
        assert c == F(stirling2(k, j) * falling_factorial(N, j), N**k)
    assert sum(c for c, _ in terms) == 1
    assert terms[-1] == (F(falling_factorial(N, k), N**k), law_without_replacement(u, k))
    assert len(pattern_terms(u, k)) == sum(stirling2(k, j) for j in range(1, k + 1))


def test_tv_gap_bounds_examples():
    b = tv_gap_bounds(5, 1)
    assert (b.exact_gap_bound, b.coarse_bound) == (0, 0)
    b = tv_gap_bounds(3, 2)
    assert (b.exact_gap_bound, b.coarse_bound) == (F(2, 3), F(2, 3))
    b = tv_gap_bounds(10, 3)
    assert (b.exact_gap_bound, b.coarse_bound) == (F(14, 25), F(3, 5))
    with pytest.raises(KOutOfRange):
        tv_gap_bounds(2, 3)


def test_equality_condition_examples():
    assert check_equality_condition(Urn.parse("a,b,c"), 2) == (True, F(2, 3))
    assert check_equality_condition(AAB, 2) == (False, F(4, 9))
    assert check_equality_condition(AAB, 1) == (True, 0)
    assert check_equality_condition(Urn.parse("a,b"), 1) == (True, 0)


def test_equality_condition_detects_violation(monkeypatch):
    import exchkit.combinatorics as cb

    # a wrong without-replacement law must trip the equality contract
    monkeypatch.setattr(cb, "law_without_replacement", lambda u, k: cb.law_with_replacement(u, k))
    with pytest.raises(TheoremViolation):
        cb.check_equality_condition(Urn.parse("a,b,c"), 2)


def test_recursion_example():
    polys = without_replacement_polynomials(2, 2, "ab")
    L = Polynomial.var
    assert polys[("a", "a")] == L("a") * L("a") * 2 - L("a")
    assert polys[("a", "b")] == L("a") * L("b") * 2


def test_polynomial_arithmetic():
    x, y = Polynomial.var("x"), Polynomial.var("y")
    p = (x + y) * (x - y)
    assert p == x * x - y * y
    assert p.degree() == 2
    assert p.l1_norm() == 2
    assert p.evaluate({"x": F(3), "y": F(1)}.__getitem__) == 8
    assert (p + 0) == p and (1 - x) == Polynomial.const(1) - x


def test_urn_from_empirical_roundtrip():
    mu = from_probabilities({"a": F(1, 4), "b": F(3, 4)})
    assert Counter(urn_from_empirical(mu, 4).points) == Counter("abbb")
    with pytest.raises(ValueError):
        urn_from_empirical(mu, 3)


# --- properties -------------------------------------------------------------------


@given(urns(), st.data())
def test_without_replacement_matches_oracle(u, data):
    k = data.draw(st.integers(1, u.N))
    assert dict(law_without_replacement(u, k).weights) == oracle_without(u, k)


@given(urns(max_n=5), st.data())
def test_with_replacement_matches_index_count(u, data):
    k = data.draw(st.integers(1, u.N))
    assert dict(law_with_replacement(u, k).weights) == oracle_with(u, k)


@given(urns(), st.data())
def test_decomposition_reconstructs(u, data):
    k = data.draw(st.integers(1, u.N))
    assert reconstruct(decompose_product_power(u, k)) == tensor_power(u.empirical(), k)


@given(urns(), st.data())
def test_tv_bounds_and_equality_iff_distinct(u, data):
    k = data.draw(st.integers(2, max(2, u.N))) if u.N >= 2 else 1
    b = tv_gap_bounds(u.N, k)
    eq, tv = check_equality_condition(u, k)
    assert tv <= b.exact_gap_bound <= b.coarse_bound
    if k >= 2:
        assert eq == (len(set(u.points)) == u.N)


@given(urns(), st.data())
def test_laws_invariant_under_urn_permutation(u, data):
    perm = data.draw(st.permutations(u.points))
    k = data.draw(st.integers(1, u.N))
    v = Urn(tuple(perm))
    assert law_without_replacement(u, k) == law_without_replacement(v, k)
    assert law_with_replacement(u, k) == law_with_replacement(v, k)


@given(urns(), st.data())
def test_without_replacement_law_is_exchangeable_with_urn_marginals(u, data):
    k = data.draw(st.integers(1, u.N))
    lam = law_without_replacement(u, k)
    for i in range(k):
        assert lam.marginal(i) == u.empirical()


@given(urns(), st.data())
def test_law_from_empirical_alone(u, data):
    k = data.draw(st.integers(1, u.N))
    assert law_without_replacement_from_empirical(u.empirical(), u.N, k) == law_without_replacement(u, k)


@given(urns(max_n=5), st.data())
def test_tv_gap_at_most_twice_collision_probability(u, data):
    # the with-replacement law differs only on collision events
    k = data.draw(st.integers(1, u.N))
    tv = tv_distance(law_without_replacement(u, k), law_with_replacement(u, k))
    assert tv <= 2 * (1 - F(falling_factorial(u.N, k), u.N**k))
