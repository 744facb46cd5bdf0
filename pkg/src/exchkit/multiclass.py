"""Multi-class systems that are exchangeable within each class.

A system has C classes. A finite class holds N_i particles; an infinite
class is represented constructively (a directing measure drawn from a
finite prior, then i.i.d. particles) and observed through a length-M
prefix. The measure vector holds the empirical measure of every finite
class and the directing measure of every infinite class; given it, the
classes are independent, finite ones uniformly permuted and infinite ones
i.i.d. from their directing measure. This module builds such systems,
resamples them conditionally on their measure vector, and checks that
conditional law exactly (by enumeration) or statistically (Monte Carlo).
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from fractions import Fraction
from itertools import combinations_with_replacement, product
from typing import Callable, Iterable, Mapping, Sequence

from .combinatorics import law_without_replacement, urn_from_empirical
from .errors import (
    BlackBoxLaw,
    EmptyTuple,
    MissingDirectingMeasure,
    NotMultiExchangeable,
    TooLargeToEnumerate,
)
from .measures import (
    ENUMERATION_GUARD,
    Atom,
    DiscreteMeasure,
    as_fraction,
    product_measure,
    tensor_power,
)
from .sampling import MixtureModel, RngStream, cumulative, draw, draw_tuple, random_permutation, sample_iid


# --- model types -------------------------------------------------------------


@dataclass(frozen=True)
class ClassSpec:
    """One class: ``size`` particles (None = infinitely many) over ``alphabet``.

    ``truncation`` is the observed prefix length M of an infinite class.
    """

    alphabet: tuple
    size: int | None = None
    truncation: int | None = None
    name: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "alphabet", tuple(self.alphabet))
        if not self.alphabet or len(set(self.alphabet)) != len(self.alphabet):
            raise ValueError("alphabet must be nonempty with distinct atoms")
        if self.size is None:
            if self.truncation is None or self.truncation < 1:
                raise ValueError("an infinite class needs a truncation M >= 1")
        elif self.size < 1:
            raise ValueError("finite class sizes must be >= 1")

    @classmethod
    def finite(cls, n: int, alphabet: Iterable[Atom], name: str | None = None) -> "ClassSpec":
        return cls(tuple(alphabet), size=n, name=name)

    @classmethod
    def infinite(cls, alphabet: Iterable[Atom], truncation: int, name: str | None = None) -> "ClassSpec":
        return cls(tuple(alphabet), size=None, truncation=truncation, name=name)

    @property
    def is_infinite(self) -> bool:
        return self.size is None

    def length(self, truncation: int | None = None) -> int:
        """Number of observed coordinates: N_i, or M (possibly overridden)."""
        if self.is_infinite:
            return self.truncation if truncation is None else truncation
        return self.size


@dataclass(frozen=True)
class LatentComponent:
    """One value of the latent index shared by all classes.

    ``finite_law`` is the joint law of the concatenated finite-class tuples
    (None when there are no finite classes); ``directing`` lists one arity-1
    measure per infinite class, in class order.
    """

    weight: Fraction
    finite_law: DiscreteMeasure | None
    directing: tuple[DiscreteMeasure, ...] = ()


@dataclass(frozen=True)
class SystemRealization:
    """One sampled configuration, one tuple per class.

    ``directing[i]`` is the realized directing measure of infinite class i
    when the generator exposes it, else None (always None for finite
    classes).
    """

    blocks: tuple[tuple, ...]
    infinite: tuple[bool, ...]
    directing: tuple[DiscreteMeasure | None, ...]

    def __post_init__(self):
        if not (len(self.blocks) == len(self.infinite) == len(self.directing)):
            raise ValueError("per-class fields must have equal length")
        for inf, q in zip(self.infinite, self.directing):
            if q is not None and (not inf or q.arity != 1 or q.total() != 1):
                raise ValueError("directing measures must be probability measures on infinite classes")

    def flat(self) -> tuple:
        return tuple(a for b in self.blocks for a in b)


@dataclass(frozen=True)
class MeasureVector:
    measures: tuple[DiscreteMeasure, ...]

    def __iter__(self):
        return iter(self.measures)

    def __len__(self):
        return len(self.measures)

    def __getitem__(self, i) -> DiscreteMeasure:
        return self.measures[i]


Sampler = Callable[[RngStream], SystemRealization]


@dataclass(frozen=True)
class SystemSpec:
    """Joint model of a multi-class system.

    Exact form: ``components`` (a finite latent mixture, see
    :class:`LatentComponent`). Black-box form: ``sampler`` only. Exact specs
    can also be sampled.
    """

    classes: tuple[ClassSpec, ...]
    components: tuple[LatentComponent, ...] = ()
    sampler: Sampler | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "classes", tuple(self.classes))
        object.__setattr__(self, "components", tuple(c for c in self.components if c.weight))
        if not self.classes:
            raise ValueError("a system needs at least one class")
        if not self.components and self.sampler is None:
            raise ValueError("give latent components or a sampler")
        if self.components:
            self._validate_components()

    def _validate_components(self):
        total = sum((c.weight for c in self.components), Fraction(0))
        if total != 1:
            raise ValueError(f"component weights sum to {total}")
        fin = self.finite_indices
        inf = self.infinite_indices
        width = sum(self.classes[i].size for i in fin)
        for c in self.components:
            if c.weight < 0:
                raise ValueError("negative component weight")
            if fin:
                if c.finite_law is None or c.finite_law.arity != width:
                    raise ValueError(f"finite law must have arity {width}")
                for t in c.finite_law:
                    for i, blk in zip(fin, _split(t, [self.classes[i].size for i in fin])):
                        if not set(blk) <= set(self.classes[i].alphabet):
                            raise ValueError(f"tuple {t} leaves the alphabet of class {i}")
            elif c.finite_law is not None:
                raise ValueError("finite law given but there are no finite classes")
            if len(c.directing) != len(inf):
                raise ValueError("need one directing measure per infinite class")
            for i, q in zip(inf, c.directing):
                if q.arity != 1 or q.total() != 1 or not set(q.atoms()) <= set(self.classes[i].alphabet):
                    raise ValueError(f"bad directing measure for class {i}")

    # -- constructors --

    @classmethod
    def coupled(
        cls,
        classes: Sequence[ClassSpec],
        components: Sequence[tuple[object, Sequence[DiscreteMeasure]]],
    ) -> "SystemSpec":
        """Latent mixture with per-class laws inside each component.

        Each component is ``(weight, laws)`` with one law per class: for a
        finite class of size n, an arity-n tuple law or an arity-1 measure
        (meaning n i.i.d. draws); for an infinite class, its directing
        measure. Classes are independent within a component.
        """
        classes = tuple(classes)
        comps = []
        for w, laws in components:
            if len(laws) != len(classes):
                raise ValueError("need one law per class")
            fin_laws = []
            directing = []
            for c, law in zip(classes, laws):
                if c.is_infinite:
                    directing.append(law)
                elif law.arity == c.size:
                    fin_laws.append(law)
                elif law.arity == 1:
                    fin_laws.append(tensor_power(law, c.size))
                else:
                    raise ValueError(f"law of arity {law.arity} for a class of size {c.size}")
            finite_law = product_measure(*fin_laws) if fin_laws else None
            comps.append(LatentComponent(as_fraction(w), finite_law, tuple(directing)))
        return cls(classes, tuple(comps))

    @classmethod
    def independent(
        cls,
        classes: Sequence[ClassSpec],
        laws: Sequence[DiscreteMeasure | MixtureModel],
    ) -> "SystemSpec":
        """Independent classes. Finite: a tuple law or a MixtureModel of
        i.i.d. laws; infinite: a MixtureModel prior on its directing measure."""
        classes = tuple(classes)
        per_class: list[list[tuple[Fraction, DiscreteMeasure]]] = []
        for c, law in zip(classes, laws, strict=True):
            if c.is_infinite:
                m = law if isinstance(law, MixtureModel) else MixtureModel.point(law)
                per_class.append([(w, q) for q, w in m.components])
            else:
                if isinstance(law, MixtureModel):
                    law = law.law(c.size)
                per_class.append([(Fraction(1), law)])
        comps = []
        for choice in product(*per_class):
            w = math.prod((w for w, _ in choice), start=Fraction(1))
            comps.append((w, [m for _, m in choice]))
        return cls.coupled(classes, comps)

    @classmethod
    def black_box(cls, classes: Sequence[ClassSpec], sampler: Sampler) -> "SystemSpec":
        return cls(tuple(classes), (), sampler)

    # -- structure --

    @property
    def exact(self) -> bool:
        return bool(self.components)

    @property
    def finite_indices(self) -> tuple[int, ...]:
        return tuple(i for i, c in enumerate(self.classes) if not c.is_infinite)

    @property
    def infinite_indices(self) -> tuple[int, ...]:
        return tuple(i for i, c in enumerate(self.classes) if c.is_infinite)

    def block_lengths(self, truncation: int | None = None) -> list[int]:
        return [c.length(truncation) for c in self.classes]

    def split(self, flat: Sequence, truncation: int | None = None) -> tuple[tuple, ...]:
        return _split(flat, self.block_lengths(truncation))

    def structure(self) -> tuple:
        """Class sizes and alphabets, ignoring laws and truncations."""
        return tuple((c.size, c.alphabet) for c in self.classes)

    def with_truncation(self, M: int) -> "SystemSpec":
        classes = tuple(
            ClassSpec(c.alphabet, c.size, M if c.is_infinite else None, c.name) for c in self.classes
        )
        return SystemSpec(classes, self.components, self.sampler)

    # -- sampling --

    def sample(self, rng: RngStream) -> SystemRealization:
        if self.sampler is not None:
            r = self.sampler(rng)
            self._check_realization(r)
            return r
        comp = draw(self.components, self._component_cdf, rng)
        blocks: list[tuple | None] = [None] * len(self.classes)
        directing: list[DiscreteMeasure | None] = [None] * len(self.classes)
        fin = self.finite_indices
        if fin:
            t = draw_tuple(comp.finite_law, rng)
            for i, blk in zip(fin, _split(t, [self.classes[i].size for i in fin])):
                blocks[i] = blk
        for i, q in zip(self.infinite_indices, comp.directing):
            blocks[i] = sample_iid(q, self.classes[i].truncation, rng)
            directing[i] = q
        return SystemRealization(tuple(blocks), self._infinite_flags(), tuple(directing))

    @cached_property
    def _component_cdf(self) -> tuple[float, ...]:
        return cumulative([c.weight for c in self.components])

    def _infinite_flags(self) -> tuple[bool, ...]:
        return tuple(c.is_infinite for c in self.classes)

    def _check_realization(self, r: SystemRealization) -> None:
        if r.infinite != self._infinite_flags():
            raise ValueError("realization class kinds do not match the spec")
        for c, blk in zip(self.classes, r.blocks):
            if len(blk) != c.length() or not set(blk) <= set(c.alphabet):
                raise ValueError(f"block {blk} does not fit class {c}")


def _split(flat: Sequence, lengths: Sequence[int]) -> tuple[tuple, ...]:
    if len(flat) != sum(lengths):
        raise ValueError(f"tuple of length {len(flat)} does not split into {list(lengths)}")
    out, pos = [], 0
    for n in lengths:
        out.append(tuple(flat[pos : pos + n]))
        pos += n
    return tuple(out)


# --- measures of a realization ----------------------------------------------


def empirical_measure(t: Sequence[Atom]) -> DiscreteMeasure:
    if not t:
        raise EmptyTuple("empirical measure of an empty tuple")
    counts: dict[tuple, int] = {}
    for a in t:
        counts[(a,)] = counts.get((a,), 0) + 1
    return DiscreteMeasure.from_weights(1, {x: Fraction(c, len(t)) for x, c in counts.items()})


def estimate_directing_measure(prefix: Sequence[Atom], k: int) -> tuple[DiscreteMeasure, Fraction]:
    """Prefix empirical measure, and the bound k(k-1)/M on the TV gap between
    k draws without replacement from the prefix and k i.i.d. draws from it."""
    if k < 1:
        raise ValueError("k must be positive")
    mu = empirical_measure(prefix)
    return mu, Fraction(k * (k - 1), len(prefix))


def measure_vector(r: SystemRealization) -> MeasureVector:
    out = []
    for blk, inf, q in zip(r.blocks, r.infinite, r.directing):
        if inf and q is not None:
            out.append(q)
        else:
            out.append(empirical_measure(blk))
    return MeasureVector(tuple(out))


def conditional_resample(
    r: SystemRealization, rng: RngStream, estimate_missing: bool = False
) -> SystemRealization:
    """Redraw every class independently given the measure vector.

    Finite classes get a uniform permutation of their own tuple; infinite
    classes get M fresh i.i.d. draws from their directing measure (or, with
    ``estimate_missing``, from the prefix empirical measure). Class i uses
    substream ``rng.child(i)``.
    """
    return _resample(r, [rng.child(i) for i in range(len(r.blocks))], estimate_missing)


def _resample(r: SystemRealization, streams: Sequence[RngStream], estimate_missing: bool = False):
    blocks = []
    directing = []
    for i, (blk, inf, q) in enumerate(zip(r.blocks, r.infinite, r.directing)):
        if not inf:
            perm = random_permutation(len(blk), streams[i])
            blocks.append(tuple(blk[j] for j in perm))
            directing.append(None)
            continue
        if q is None:
            if not estimate_missing:
                raise MissingDirectingMeasure(f"class {i} has no directing measure")
            q = empirical_measure(blk)
        blocks.append(sample_iid(q, len(blk), streams[i]))
        directing.append(q)
    return SystemRealization(tuple(blocks), r.infinite, tuple(directing))


# --- exact laws ----------------------------------------------------------------


def _enumeration_size(spec: SystemSpec, truncation: int | None) -> int:
    total = 0
    for c in spec.components:
        n = len(c.finite_law) if c.finite_law is not None else 1
        for i, q in zip(spec.infinite_indices, c.directing):
            n *= len(q) ** spec.classes[i].length(truncation)
        total += n
    return total


def latent_law(spec: SystemSpec, truncation: int | None = None) -> dict[tuple, Fraction]:
    """Exact pmf of (directing tuple, flat configuration), both observable
    in the constructive model; the measure vector is a function of the key."""
    if not spec.exact:
        raise BlackBoxLaw("this system is only available as a sampler")
    size = _enumeration_size(spec, truncation)
    if size > ENUMERATION_GUARD:
        raise TooLargeToEnumerate(f"{size} latent outcomes")
    fin = spec.finite_indices
    inf = spec.infinite_indices
    lengths = spec.block_lengths(truncation)
    out: dict[tuple, Fraction] = {}
    for comp in spec.components:
        fin_items = comp.finite_law.items() if comp.finite_law is not None else [((), Fraction(1))]
        inf_laws = [tensor_power(q, lengths[i]).items() for i, q in zip(inf, comp.directing)]
        for ft, fw in fin_items:
            fblocks = _split(ft, [lengths[i] for i in fin])
            for combo in product(*inf_laws):
                blocks: list = [None] * len(lengths)
                for i, b in zip(fin, fblocks):
                    blocks[i] = b
                w = comp.weight * fw
                for i, (t, p) in zip(inf, combo):
                    blocks[i] = t
                    w *= p
                key = (comp.directing, tuple(a for b in blocks for a in b))
                out[key] = out.get(key, Fraction(0)) + w
    return out


def joint_law_exact(spec: SystemSpec, truncation: int | None = None) -> DiscreteMeasure:
    """Exact pmf of the concatenated class tuples (infinite classes cut at M)."""
    weights: dict[tuple, Fraction] = {}
    for (_, x), w in latent_law(spec, truncation).items():
        weights[x] = weights.get(x, Fraction(0)) + w
    return DiscreteMeasure.from_weights(sum(spec.block_lengths(truncation)), weights)


def vector_of(spec: SystemSpec, key: tuple, truncation: int | None = None) -> MeasureVector:
    """Measure vector of a :func:`latent_law` outcome."""
    qs, x = key
    blocks = spec.split(x, truncation)
    qi = iter(qs)
    return MeasureVector(
        tuple(next(qi) if c.is_infinite else empirical_measure(b) for c, b in zip(spec.classes, blocks))
    )


def _adjacent_swaps(spec: SystemSpec, truncation: int | None) -> list[tuple[int, int]]:
    swaps, pos = [], 0
    for n in spec.block_lengths(truncation):
        swaps.extend((pos + t, pos + t + 1) for t in range(n - 1))
        pos += n
    return swaps


def _invariant(weights: Mapping[tuple, Fraction], swaps) -> bool:
    for x, w in weights.items():
        for a, b in swaps:
            if x[a] == x[b]:
                continue
            y = list(x)
            y[a], y[b] = y[b], y[a]
            if weights.get(tuple(y), Fraction(0)) != w:
                return False
    return True


def check_multi_exchangeability(
    joint: DiscreteMeasure, spec: SystemSpec, truncation: int | None = None
) -> bool:
    """True iff ``joint`` is invariant under every adjacent transposition
    inside each class block (these generate all within-class permutations)."""
    if joint.arity != sum(spec.block_lengths(truncation)):
        raise ValueError("joint law arity does not match the class layout")
    if len(joint) * max(1, joint.arity) > ENUMERATION_GUARD:
        raise TooLargeToEnumerate(f"{len(joint)} outcomes")
    return _invariant(joint.weights, _adjacent_swaps(spec, truncation))


def check_latent_exchangeability(spec: SystemSpec, truncation: int | None = None) -> bool:
    """Within-class invariance of the law given each directing-measure value.

    The truncated joint law can be exchangeable while the infinite system is
    not (a prefix cannot always tell directing measures apart); conditioning
    on the directing measures is the faithful check.
    """
    groups: dict[tuple, dict[tuple, Fraction]] = {}
    for (qs, x), w in latent_law(spec, truncation).items():
        g = groups.setdefault(qs, {})
        g[x] = g.get(x, Fraction(0)) + w
    swaps = _adjacent_swaps(spec, truncation)
    return all(_invariant(g, swaps) for g in groups.values())


def resample_kernel(v: MeasureVector, spec: SystemSpec, truncation: int | None = None) -> DiscreteMeasure:
    """Law of :func:`conditional_resample` given measure vector ``v``.

    Finite classes: all N_i draws without replacement from the urn whose
    empirical measure is ``v[i]``; infinite: M i.i.d. draws from ``v[i]``.
    """
    parts = []
    for c, mu in zip(spec.classes, v):
        n = c.length(truncation)
        if c.is_infinite:
            parts.append(tensor_power(mu, n))
        else:
            parts.append(law_without_replacement(urn_from_empirical(mu, n), n))
    return product_measure(*parts)


def _block_marginals_product(weights: Mapping[tuple, Fraction], lengths: Sequence[int]) -> DiscreteMeasure:
    mu = DiscreteMeasure(sum(lengths), weights)
    parts, pos = [], 0
    for n in lengths:
        parts.append(mu.marginal(tuple(range(pos, pos + n))))
        pos += n
    return product_measure(*parts)


@dataclass(frozen=True)
class SufficiencyReport:
    law_preserved: bool
    conditional_matches_kernel: bool
    factorizes: bool
    unconditionally_coupled: bool
    n_outcomes: int
    n_measure_vectors: int
    max_deviation: Fraction

    @property
    def passed(self) -> bool:
        return self.law_preserved and self.conditional_matches_kernel and self.factorizes

    def to_json(self) -> dict:
        return {
            "law_preserved": self.law_preserved,
            "conditional_matches_kernel": self.conditional_matches_kernel,
            "factorizes": self.factorizes,
            "unconditionally_coupled": self.unconditionally_coupled,
            "n_outcomes": self.n_outcomes,
            "n_measure_vectors": self.n_measure_vectors,
            "max_deviation": self.max_deviation,
            "pass": self.passed,
        }


def verify_sufficiency(spec: SystemSpec, truncation: int | None = None) -> SufficiencyReport:
    """Exact check that resampling given the measure vector preserves the law.

    Enumerates the joint law, groups outcomes by measure vector, composes
    with the per-class resampling kernel and compares with ``==``. Also
    checks that each conditional law equals the kernel and is a product over
    classes, and records whether the classes are coupled unconditionally.
    """
    lat = latent_law(spec, truncation)
    joint = joint_law_exact(spec, truncation)
    if not (check_multi_exchangeability(joint, spec, truncation) and check_latent_exchangeability(spec, truncation)):
        raise NotMultiExchangeable("law is not invariant under within-class permutations")
    lengths = spec.block_lengths(truncation)

    by_vector: dict[MeasureVector, dict[tuple, Fraction]] = {}
    for key, w in lat.items():
        g = by_vector.setdefault(vector_of(spec, key, truncation), {})
        g[key[1]] = g.get(key[1], Fraction(0)) + w

    composed: dict[tuple, Fraction] = {}
    matches = factorizes = True
    for v, g in by_vector.items():
        mass = sum(g.values(), Fraction(0))
        kernel = resample_kernel(v, spec, truncation)
        for y, p in kernel.items():
            composed[y] = composed.get(y, Fraction(0)) + mass * p
        cond = DiscreteMeasure.from_weights(joint.arity, {x: w / mass for x, w in g.items()})
        matches = matches and cond == kernel
        factorizes = factorizes and cond == _block_marginals_product(cond.weights, lengths)

    keys = set(composed) | set(joint.weights)
    deviation = max((abs(composed.get(x, Fraction(0)) - joint[x]) for x in keys), default=Fraction(0))
    coupled = joint != _block_marginals_product(joint.weights, lengths)
    return SufficiencyReport(
        law_preserved=deviation == 0,
        conditional_matches_kernel=matches,
        factorizes=factorizes,
        unconditionally_coupled=coupled,
        n_outcomes=len(joint),
        n_measure_vectors=len(by_vector),
        max_deviation=deviation,
    )


# --- statistical shadow --------------------------------------------------------


@dataclass(frozen=True)
class TestFunction:
    name: str
    fn: Callable[[tuple[tuple, ...]], float]


def indicator_battery(spec: SystemSpec, k: int = 2) -> list[TestFunction]:
    """Products over classes of indicators of the first min(k, length) coordinates."""
    per_class = []
    for i, c in enumerate(spec.classes):
        m = min(k, c.length())
        per_class.append([(i, pat) for pat in product(c.alphabet, repeat=m)])
    out = []
    for choice in product(*per_class):
        name = "ind[" + ";".join(f"{i}:{''.join(map(str, pat))}" for i, pat in choice) + "]"

        def fn(blocks, choice=choice):
            return float(all(blocks[i][: len(pat)] == pat for i, pat in choice))

        out.append(TestFunction(name, fn))
    return out


def empirical_moment_battery(spec: SystemSpec) -> list[TestFunction]:
    """First and second moments of the per-class empirical frequencies."""
    coords = [(i, a) for i, c in enumerate(spec.classes) for a in c.alphabet]

    def freq(blocks, i, a):
        b = blocks[i]
        return b.count(a) / len(b)

    out = [TestFunction(f"emp[{i}:{a}]", lambda bl, i=i, a=a: freq(bl, i, a)) for i, a in coords]
    for (i, a), (j, b) in combinations_with_replacement(coords, 2):
        out.append(
            TestFunction(
                f"emp[{i}:{a}]*emp[{j}:{b}]",
                lambda bl, i=i, a=a, j=j, b=b: freq(bl, i, a) * freq(bl, j, b),
            )
        )
    return out


@dataclass(frozen=True)
class ShadowRow:
    name: str
    original: float
    resampled: float
    stderr: float
    z: float
    passed: bool


@dataclass(frozen=True)
class ShadowReport:
    reps: int
    seed: int
    n_sigma: float
    rows: tuple[ShadowRow, ...]
    measure_vector_preserved: bool

    @property
    def passed(self) -> bool:
        return self.measure_vector_preserved and all(r.passed for r in self.rows)


# Replications are split into this many streams regardless of thread count,
# so results do not depend on the degree of parallelism.
N_STREAMS = 16


def _shadow_chunk(spec: SystemSpec, battery, seed: int, stream_id: int, reps: int, estimate_missing: bool):
    rng = RngStream(seed, stream_id)
    draw = rng.child(0)
    class_streams = [rng.child(1).child(i) for i in range(len(spec.classes))]
    n = len(battery)
    s = [0.0] * n
    sr = [0.0] * n
    sd = [0.0] * n
    sdd = [0.0] * n
    preserved = True
    for _ in range(reps):
        r = spec.sample(draw)
        r2 = _resample(r, class_streams, estimate_missing)
        if not estimate_missing:
            preserved = preserved and _finite_vectors_equal(r, r2)
        for t, f in enumerate(battery):
            a = f.fn(r.blocks)
            b = f.fn(r2.blocks)
            d = a - b
            s[t] += a
            sr[t] += b
            sd[t] += d
            sdd[t] += d * d
    return s, sr, sd, sdd, preserved


def _finite_vectors_equal(r: SystemRealization, r2: SystemRealization) -> bool:
    # Infinite classes keep their directing measure by construction.
    return measure_vector(r) == measure_vector(r2)


def _chunks(reps: int) -> list[int]:
    base, extra = divmod(reps, N_STREAMS)
    return [base + (1 if i < extra else 0) for i in range(N_STREAMS)]


def verify_sufficiency_mc(
    spec: SystemSpec,
    reps: int,
    seed: int,
    k: int = 2,
    n_sigma: float = 4.0,
    threads: int = 1,
    estimate_missing: bool = False,
) -> ShadowReport:
    """Monte Carlo comparison of test-function means, original vs resampled.

    Each replication samples a realization and resamples it given its
    measure vector; the paired differences give the standard error.
    """
    if reps < 2:
        raise ValueError("need at least two replications")
    battery = indicator_battery(spec, k) + empirical_moment_battery(spec)
    sizes = _chunks(reps)
    args = [(spec, battery, seed, sid, n, estimate_missing) for sid, n in enumerate(sizes) if n]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(lambda a: _shadow_chunk(*a), args))
    else:
        parts = [_shadow_chunk(*a) for a in args]

    n = len(battery)
    tot = [[0.0] * n for _ in range(4)]
    preserved = True
    for part in parts:  # ordered by stream id
        for acc, vals in zip(tot, part[:4]):
            for t in range(n):
                acc[t] += vals[t]
        preserved = preserved and part[4]
    rows = []
    for t, f in enumerate(battery):
        mean_a = tot[0][t] / reps
        mean_b = tot[1][t] / reps
        mean_d = tot[2][t] / reps
        var_d = max(tot[3][t] / reps - mean_d * mean_d, 0.0) * reps / (reps - 1)
        se = math.sqrt(var_d / reps)
        z = abs(mean_d) / se if se > 0 else (0.0 if mean_d == 0 else math.inf)
        rows.append(ShadowRow(f.name, mean_a, mean_b, se, z, z <= n_sigma))
    return ShadowReport(reps, seed, n_sigma, tuple(rows), preserved)
