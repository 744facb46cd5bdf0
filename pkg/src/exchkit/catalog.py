"""Named example systems and families used by tests, scripts and configs."""
from __future__ import annotations

from fractions import Fraction
from itertools import product
from typing import Iterator, Sequence

from .convergence import LIMIT, SystemFamily
from .measures import DiscreteMeasure, from_probabilities, uniform
from .multiclass import ClassSpec, SystemRealization, SystemSpec
from .sampling import MixtureModel, RngStream, categorical, sample_iid

AB = ("a", "b")


def point(a) -> DiscreteMeasure:
    return DiscreteMeasure.point_mass((a,))


def iter_small_specs(max_size: int = 3, max_truncation: int = 3) -> Iterator[tuple[str, SystemSpec]]:
    """Exact binary-alphabet specs with C <= 2 and sizes/truncations up to the
    given bounds, independent and latently coupled."""
    half = Fraction(1, 2)
    p = from_probabilities({"a": Fraction(1, 3), "b": Fraction(2, 3)})
    q = from_probabilities({"a": Fraction(3, 4), "b": Fraction(1, 4)})
    prior = MixtureModel(((p, half), (q, half)))
    sizes = [("fin", n) for n in range(1, max_size + 1)] + [("inf", m) for m in range(1, max_truncation + 1)]

    def cls(kind, n):
        return ClassSpec.finite(n, AB) if kind == "fin" else ClassSpec.infinite(AB, n)

    for kind, n in sizes:
        c = cls(kind, n)
        yield f"single-{kind}{n}-iid-mixture", SystemSpec.independent([c], [prior])
        if kind == "fin" and n >= 2:
            # exchangeable but not a mixture of i.i.d. laws: exactly one 'a'
            one_a = [tuple("a" if j == i else "b" for j in range(n)) for i in range(n)]
            yield f"single-fin{n}-one-a", SystemSpec.independent([c], [uniform(one_a)])
    for (k1, n1), (k2, n2) in product(sizes, repeat=2):
        c1, c2 = cls(k1, n1), cls(k2, n2)
        tag = f"{k1}{n1}-{k2}{n2}"
        yield f"indep-{tag}", SystemSpec.independent([c1, c2], [prior, prior])
        yield f"coupled-{tag}", SystemSpec.coupled(
            [c1, c2], [(Fraction(1, 3), [p, q]), (Fraction(2, 3), [point("a"), point("b")])]
        )
        yield f"coupled-pm-{tag}", SystemSpec.coupled([c1, c2], [(half, [point("a"), point("a")]), (half, [point("b"), q])])


def coupled_binary_system() -> SystemSpec:
    """Two finite classes of size 2 whose compositions are tied by a latent coin."""
    c = [ClassSpec.finite(2, AB, "F1"), ClassSpec.finite(2, AB, "F2")]
    return SystemSpec.coupled(
        c,
        [
            (Fraction(1, 2), [uniform([("a", "b"), ("b", "a")]), from_probabilities({"a": 1})]),
            (Fraction(1, 2), [from_probabilities({"a": Fraction(1, 4), "b": Fraction(3, 4)}), uniform([("a", "b"), ("b", "a")])]),
        ],
    )


def mixed_member(weight_a: Fraction, truncation: int = 2) -> SystemSpec:
    """Size-2 finite class coupled to an infinite class directed by delta_a
    (probability ``weight_a``) or delta_b."""
    classes = [ClassSpec.finite(2, AB, "finite"), ClassSpec.infinite(AB, truncation, "infinite")]
    return SystemSpec.coupled(
        classes,
        [
            (weight_a, [uniform([("a", "b"), ("b", "a")]), point("a")]),
            (1 - weight_a, [from_probabilities({"a": Fraction(1, 3), "b": Fraction(2, 3)}), point("b")]),
        ],
    )


def mixture_family(grid: Sequence[int] = (1, 2, 4, 8, 16, 32, 64)) -> SystemFamily:
    """Directing weights (1/2 + 1/(2r), 1/2 - 1/(2r)) converging to (1/2, 1/2)."""
    members = {r: mixed_member(Fraction(1, 2) + Fraction(1, 2 * r)) for r in grid}
    members[LIMIT] = mixed_member(Fraction(1, 2))
    return SystemFamily(members)


def perturbed_family(grid: Sequence[int] = (1, 2, 4, 8)) -> SystemFamily:
    """Like :func:`mixture_family` but the finite class of every member
    carries an ordered (non-exchangeable) perturbation of size 1/(4r)."""
    fam = mixture_family(grid)
    members = dict(fam.spec_at)
    for r in grid:
        eps = Fraction(1, 4 * r)
        base = members[r]
        comps = list(base.components)
        first = comps[0]
        law = first.finite_law
        skew = DiscreteMeasure.from_weights(
            2, {("a", "b"): law[("a", "b")] + eps, ("b", "a"): law[("b", "a")] - eps}
        )
        comps[0] = type(first)(first.weight, skew, first.directing)
        members[r] = SystemSpec(base.classes, tuple(comps))
    return SystemFamily(members)


def polya_black_box(finite_size: int = 3, truncation: int = 3) -> SystemSpec:
    """Sampler-only system: a latent coin picks a Polya urn for the finite
    class and a directing measure for the infinite class.

    A Polya urn sequence is exchangeable but not i.i.d.; its law is never
    enumerated here.
    """
    classes = [ClassSpec.finite(finite_size, AB, "polya"), ClassSpec.infinite(AB, truncation, "mixed")]
    urns = [(1, 2), (3, 1)]
    directing = [from_probabilities({"a": Fraction(1, 5), "b": Fraction(4, 5)}), from_probabilities({"a": Fraction(2, 3), "b": Fraction(1, 3)})]

    def sampler(rng: RngStream) -> SystemRealization:
        u = categorical([0, 1], [Fraction(1, 3), Fraction(2, 3)], rng)
        na, nb = urns[u]
        draws = []
        for _ in range(finite_size):
            if rng.below(na + nb) < na:
                draws.append("a")
                na += 1
            else:
                draws.append("b")
                nb += 1
        q = directing[u]
        return SystemRealization((tuple(draws), sample_iid(q, truncation, rng)), (False, True), (None, q))

    return SystemSpec.black_box(classes, sampler)
