"""Sampling laws of an urn with and without replacement.

An urn holds N labelled, possibly equal, points. Drawing k of them without
replacement gives the law ``lambda^{N,k}``; with replacement gives the k-th
tensor power of the empirical measure. The collision decomposition below
splits the with-replacement law by the set-partition shape of the index
tuple, and inverting it expresses the without-replacement law as a
polynomial in the empirical weights alone.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import permutations, product
from typing import Callable, NamedTuple, Sequence

from .errors import KOutOfRange, TheoremViolation, TooLargeToEnumerate
from .measures import (
    ENUMERATION_GUARD,
    Atom,
    DiscreteMeasure,
    IndexPattern,
    index_patterns,
    push_forward_pattern,
    tensor_power,
    tv_distance,
)


@dataclass(frozen=True)
class Urn:
    points: tuple

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(self.points))
        if not self.points:
            raise ValueError("an urn needs at least one point")

    @property
    def N(self) -> int:
        return len(self.points)

    @classmethod
    def parse(cls, text: str) -> "Urn":
        """``"a,a,b"`` -> Urn(('a', 'a', 'b'))."""
        pts = [p.strip() for p in text.split(",")]
        if not all(pts):
            raise ValueError(f"bad urn specification {text!r}")
        return cls(tuple(pts))

    def all_distinct(self) -> bool:
        return len(set(self.points)) == self.N

    def empirical(self) -> DiscreteMeasure:
        return law_with_replacement(self, 1)


def _check_k(N: int, k: int) -> None:
    if not 1 <= k <= N:
        raise KOutOfRange(f"need 1 <= k <= N, got k={k}, N={N}")


def falling_factorial(N: int, k: int) -> int:
    _check_k(N, k)
    out = 1
    for i in range(k):
        out *= N - i
    return out


def law_without_replacement(u: Urn, k: int) -> DiscreteMeasure:
    """Law of k ordered draws without replacement, by enumerating index tuples."""
    _check_k(u.N, k)
    count = falling_factorial(u.N, k)
    if count > ENUMERATION_GUARD:
        raise TooLargeToEnumerate(f"({u.N})_{k} = {count} index tuples")
    tally: dict[tuple, int] = {}
    for idx in permutations(range(u.N), k):
        t = tuple(u.points[i] for i in idx)
        tally[t] = tally.get(t, 0) + 1
    return DiscreteMeasure.from_weights(k, {t: Fraction(c, count) for t, c in tally.items()})


def law_with_replacement(u: Urn, k: int) -> DiscreteMeasure:
    if k < 1:
        raise KOutOfRange(f"k must be positive, got {k}")
    tally: dict[tuple, int] = {}
    for x in u.points:
        tally[(x,)] = tally.get((x,), 0) + 1
    emp = DiscreteMeasure.from_weights(1, {t: Fraction(c, u.N) for t, c in tally.items()})
    return emp if k == 1 else tensor_power(emp, k)


class PatternTerm(NamedTuple):
    pattern: IndexPattern
    coefficient: Fraction  # (N)_j / N^k
    measure: DiscreteMeasure  # pattern push-forward of lambda^{N,j}


def pattern_terms(u: Urn, k: int) -> list[PatternTerm]:
    """One term per index pattern of length k, finest patterns last.

    The term for a pattern with j blocks collects the (N)_j index tuples of
    that collision shape; their image law is the pattern push-forward of
    ``lambda^{N,j}``.
    """
    _check_k(u.N, k)
    if u.N**k > ENUMERATION_GUARD:
        raise TooLargeToEnumerate(f"{u.N}^{k} index tuples")
    Nk = u.N**k
    laws = {j: law_without_replacement(u, j) for j in range(1, k + 1)}
    terms = []
    for j in range(1, k + 1):
        coef = Fraction(falling_factorial(u.N, j), Nk)
        for p in index_patterns(k, j):
            terms.append(PatternTerm(p, coef, push_forward_pattern(laws[j], p)))
    return terms


def decompose_product_power(u: Urn, k: int) -> list[tuple[Fraction, DiscreteMeasure]]:
    """Split the with-replacement law by number j of distinct indices drawn.

    Returns ``[(c_1, T_1), ..., (c_k, T_k)]`` where ``T_j`` is the law of the
    drawn tuple given that exactly j distinct indices were hit and ``c_j`` the
    probability of that event, so ``sum c_j T_j`` is the k-th tensor power of
    the empirical measure and ``(c_k, T_k) = ((N)_k/N^k, lambda^{N,k})``.
    """
    by_j: dict[int, list[PatternTerm]] = {}
    for term in pattern_terms(u, k):
        by_j.setdefault(term.pattern.image_size, []).append(term)
    out = []
    for j in range(1, k + 1):
        group = by_j[j]
        coef = sum((t.coefficient for t in group), Fraction(0))
        weights: dict[tuple, Fraction] = {}
        for t in group:
            for x, w in t.measure.items():
                weights[x] = weights.get(x, Fraction(0)) + t.coefficient * w / coef
        out.append((coef, DiscreteMeasure.from_weights(k, weights)))
    return out


def reconstruct(terms: Sequence[tuple[Fraction, DiscreteMeasure]]) -> DiscreteMeasure:
    arity = terms[0][1].arity
    weights: dict[tuple, Fraction] = {}
    for c, mu in terms:
        for x, w in mu.items():
            weights[x] = weights.get(x, Fraction(0)) + c * w
    return DiscreteMeasure(arity, weights)


@dataclass(frozen=True)
class GapBounds:
    N: int
    k: int
    exact_gap_bound: Fraction  # 2 (N^k - (N)_k) / N^k
    coarse_bound: Fraction  # k (k - 1) / N


def tv_gap_bounds(N: int, k: int) -> GapBounds:
    _check_k(N, k)
    Nk = N**k
    return GapBounds(
        N=N,
        k=k,
        exact_gap_bound=Fraction(2 * (Nk - falling_factorial(N, k)), Nk),
        coarse_bound=Fraction(k * (k - 1), N),
    )


class EqualityCheck(NamedTuple):
    is_equality: bool
    actual_tv: Fraction


def check_equality_condition(u: Urn, k: int) -> EqualityCheck:
    """Compare the with/without replacement TV gap to its exact bound.

    For k >= 2 the bound is attained exactly when the urn points are
    distinct; a mismatch raises :class:`TheoremViolation`. At k = 1 both laws
    coincide and the (zero) bound is always attained.
    """
    bounds = tv_gap_bounds(u.N, k)
    actual = tv_distance(law_without_replacement(u, k), law_with_replacement(u, k))
    if actual > bounds.exact_gap_bound:
        raise TheoremViolation(f"TV {actual} exceeds bound {bounds.exact_gap_bound}")
    is_eq = actual == bounds.exact_gap_bound
    if k >= 2 and is_eq != u.all_distinct():
        raise TheoremViolation(f"equality={is_eq} but all_distinct={u.all_distinct()} for {u}")
    return EqualityCheck(is_eq, actual)


# --- without-replacement laws as polynomials in the empirical weights -------


class Polynomial:
    """Sparse polynomial with Fraction coefficients.

    A monomial is a sorted tuple of ``(variable, exponent)`` pairs; the empty
    tuple is the constant monomial. Variables are any sortable labels.
    """

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        self.terms: dict[tuple, Fraction] = {m: c for m, c in (terms or {}).items() if c}

    @classmethod
    def const(cls, c) -> "Polynomial":
        return cls({(): Fraction(c)})

    @classmethod
    def var(cls, v) -> "Polynomial":
        return cls({((v, 1),): Fraction(1)})

    def __add__(self, other):
        other = _lift(other)
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out.get(m, Fraction(0)) + c
        return Polynomial(out)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial({m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-_lift(other))

    def __rsub__(self, other):
        return _lift(other) - self

    def __mul__(self, other):
        if not isinstance(other, Polynomial):
            c = Fraction(other)
            return Polynomial({m: c * v for m, v in self.terms.items()})
        out: dict[tuple, Fraction] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = _mono_mul(m1, m2)
                out[m] = out.get(m, Fraction(0)) + c1 * c2
        return Polynomial(out)

    __rmul__ = __mul__

    def __eq__(self, other):
        return isinstance(other, Polynomial) and self.terms == other.terms

    def __repr__(self):
        return f"Polynomial({self.terms!r})"

    def degree(self) -> int:
        return max((sum(e for _, e in m) for m in self.terms), default=0)

    def l1_norm(self) -> Fraction:
        return sum((abs(c) for c in self.terms.values()), Fraction(0))

    def evaluate(self, value: Callable[[object], Fraction]) -> Fraction:
        total = Fraction(0)
        for m, c in self.terms.items():
            term = c
            for v, e in m:
                term *= value(v) ** e
            total += term
        return total

    def relabel(self, f: Callable[[object], object]) -> "Polynomial":
        out: dict[tuple, Fraction] = {}
        for m, c in self.terms.items():
            key = _mono_mul((), tuple((f(v), e) for v, e in m))
            out[key] = out.get(key, Fraction(0)) + c
        return Polynomial(out)


def _lift(x) -> Polynomial:
    return x if isinstance(x, Polynomial) else Polynomial.const(x)


def _mono_mul(m1: tuple, m2: tuple) -> tuple:
    exps: dict = {}
    for v, e in m1 + m2:
        exps[v] = exps.get(v, 0) + e
    return tuple(sorted(exps.items()))


def _without_replacement_recursion(N: int, k: int, alphabet: Sequence[Atom], value):
    """pmf of lambda^{N,k} over alphabet^k, built from weights ``value(a)`` alone.

    Inverts the collision decomposition: N^k times the product weight of y
    counts all index tuples hitting y, and those with j < k distinct indices
    are accounted for by the (already known) lower-order laws.
    """
    _check_k(N, k)

    @lru_cache(maxsize=None)
    def law(y: tuple):
        j = len(y)
        if j == 1:
            return value(y[0])
        rest = 1
        for a in y:
            rest = rest * value(a)
        rest = rest * N**j
        for i in range(1, j):
            ff = falling_factorial(N, i)
            for p in index_patterns(j, i):
                z = _collapse(y, p)
                if z is not None:
                    rest = rest - law(z) * ff
        return rest * Fraction(1, falling_factorial(N, j))

    return {y: law(y) for y in product(alphabet, repeat=k)}


def _collapse(y: tuple, p: IndexPattern):
    """Block values of y under p, or None if y is not constant on p's blocks."""
    z: list = [None] * p.image_size
    for a, s in zip(y, p.slots):
        if z[s] is None:
            z[s] = a
        elif z[s] != a:
            return None
    return tuple(z)


def without_replacement_polynomials(N: int, k: int, alphabet: Sequence[Atom]) -> dict[tuple, Polynomial]:
    """For every y in alphabet^k, the polynomial P_y with lambda^{N,k}(y) = P_y(empirical).

    Variables are the atoms; evaluate with ``P.evaluate(mu.__getitem__)``.
    """
    return _without_replacement_recursion(N, k, tuple(alphabet), Polynomial.var)


def law_without_replacement_from_empirical(mu: DiscreteMeasure, N: int, k: int) -> DiscreteMeasure:
    """lambda^{N,k} computed from the empirical measure and N only (no urn)."""
    if mu.arity != 1:
        raise ValueError("expected an arity-1 empirical measure")
    weights = _without_replacement_recursion(N, k, tuple(a for (a,) in mu), lambda a: mu[a])
    return DiscreteMeasure.from_weights(k, weights)


def is_empirical_grid(mu: DiscreteMeasure, N: int) -> bool:
    """True when every weight of ``mu`` is a multiple of 1/N."""
    return all((w * N).denominator == 1 for w in mu.weights.values())


def urn_from_empirical(mu: DiscreteMeasure, N: int) -> Urn:
    if mu.arity != 1 or not is_empirical_grid(mu, N):
        raise ValueError(f"{mu} is not the empirical measure of {N} points")
    return Urn(tuple(a for (a,), w in mu.items() for _ in range(int(w * N))))


__all__ = [
    "Urn",
    "GapBounds",
    "EqualityCheck",
    "PatternTerm",
    "Polynomial",
    "falling_factorial",
    "law_without_replacement",
    "law_with_replacement",
    "pattern_terms",
    "decompose_product_power",
    "reconstruct",
    "tv_gap_bounds",
    "check_equality_condition",
    "without_replacement_polynomials",
    "law_without_replacement_from_empirical",
    "urn_from_empirical",
]
