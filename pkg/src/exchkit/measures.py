"""Exact probability measures on tuples over a finite alphabet.

Weights are :class:`fractions.Fraction` throughout, so normalization and
equality are checked with ``==``. Atoms are any hashable, mutually
comparable labels (strings in practice); tuples are iterated in
lexicographic order so that every report is reproducible.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from types import MappingProxyType
from typing import Hashable, Iterable, Iterator, Mapping, Sequence

from .errors import ArityMismatch, ArityNotOne, MixedArity, NonNormalized, TooLargeToEnumerate

Atom = Hashable

# Exact enumerations refuse to build more points than this.
ENUMERATION_GUARD = 10**7


def as_fraction(x) -> Fraction:
    """Coerce ints, Fractions and "p/q" strings; floats are rejected."""
    if isinstance(x, float):
        raise TypeError(f"refusing to convert float {x!r} to an exact weight")
    return Fraction(x)


class DiscreteMeasure:
    """An immutable finitely supported measure on k-tuples.

    Build instances with :func:`make_measure` (validated, normalized) or
    :meth:`from_weights`. Zero weights are never stored.
    """

    __slots__ = ("_arity", "_weights", "_hash")

    def __init__(self, arity: int, weights: Mapping[tuple, Fraction]):
        if arity < 1:
            raise ValueError("arity must be positive")
        clean = {}
        for t, w in weights.items():
            if len(t) != arity:
                raise MixedArity(f"tuple {t!r} does not have arity {arity}")
            if w < 0:
                raise ValueError(f"negative weight {w} at {t!r}")
            if w:
                clean[tuple(t)] = Fraction(w)
        self._arity = arity
        self._weights = MappingProxyType(dict(sorted(clean.items())))
        self._hash = None

    @classmethod
    def from_weights(cls, arity: int, weights: Mapping[tuple, Fraction]) -> "DiscreteMeasure":
        mu = cls(arity, weights)
        if mu.total() != 1:
            raise NonNormalized(f"weights sum to {mu.total()}, expected 1")
        return mu

    @classmethod
    def point_mass(cls, t: Sequence[Atom]) -> "DiscreteMeasure":
        return cls(len(t), {tuple(t): Fraction(1)})

    @property
    def arity(self) -> int:
        return self._arity

    @property
    def weights(self) -> Mapping[tuple, Fraction]:
        return self._weights

    @property
    def support(self) -> tuple:
        return tuple(self._weights)

    def total(self) -> Fraction:
        return sum(self._weights.values(), Fraction(0))

    def items(self):
        return self._weights.items()

    def __getitem__(self, t) -> Fraction:
        if self._arity == 1 and not isinstance(t, tuple):
            t = (t,)
        return self._weights.get(tuple(t), Fraction(0))

    def __iter__(self) -> Iterator[tuple]:
        return iter(self._weights)

    def __len__(self) -> int:
        return len(self._weights)

    def __eq__(self, other) -> bool:
        if not isinstance(other, DiscreteMeasure):
            return NotImplemented
        return self._arity == other._arity and self._weights == other._weights

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self._arity, tuple(self._weights.items())))
        return self._hash

    def __repr__(self) -> str:
        body = ", ".join(f"{_fmt_tuple(t)}: {w}" for t, w in self._weights.items())
        return f"DiscreteMeasure({{{body}}})"

    def atoms(self) -> tuple:
        """Sorted atoms appearing in any supported tuple."""
        return tuple(sorted({a for t in self._weights for a in t}))

    def marginal(self, coords: int | Sequence[int]) -> "DiscreteMeasure":
        """Push-forward onto the given coordinates (0-based)."""
        if isinstance(coords, int):
            coords = (coords,)
        out: dict[tuple, Fraction] = {}
        for t, w in self._weights.items():
            key = tuple(t[c] for c in coords)
            out[key] = out.get(key, Fraction(0)) + w
        return DiscreteMeasure(len(coords), out)

    def expect(self, f) -> Fraction:
        """Integral of ``f`` (a function of the tuple) against the measure."""
        return sum((w * f(t) for t, w in self._weights.items()), Fraction(0))

    def to_json(self) -> dict:
        return {
            "arity": self._arity,
            "entries": [
                {"tuple": list(t), "num": w.numerator, "den": w.denominator}
                for t, w in self._weights.items()
            ],
        }

    @classmethod
    def from_json(cls, doc: Mapping) -> "DiscreteMeasure":
        pairs = [(tuple(e["tuple"]), Fraction(e["num"], e["den"])) for e in doc["entries"]]
        mu = make_measure(pairs)
        if mu.arity != doc["arity"]:
            raise MixedArity(f"declared arity {doc['arity']} but tuples have arity {mu.arity}")
        return mu


def _fmt_tuple(t: tuple) -> str:
    return "".join(map(str, t)) if all(isinstance(a, str) and len(a) == 1 for a in t) else repr(t)


def make_measure(pairs: Iterable[tuple[Sequence[Atom], object]]) -> DiscreteMeasure:
    """Build a probability measure from ``(tuple, weight)`` pairs.

    Duplicate tuples are merged, zero weights dropped. Raises
    :class:`MixedArity` when tuple lengths differ and :class:`NonNormalized`
    unless the weights sum to exactly one.
    """
    merged: dict[tuple, Fraction] = {}
    arity = None
    for t, w in pairs:
        t = tuple(t)
        if arity is None:
            arity = len(t)
        elif len(t) != arity:
            raise MixedArity(f"tuple {t!r} has arity {len(t)}, expected {arity}")
        w = as_fraction(w)
        if w < 0:
            raise ValueError(f"negative weight {w} at {t!r}")
        merged[t] = merged.get(t, Fraction(0)) + w
    if arity is None:
        raise NonNormalized("no entries: total mass 0")
    return DiscreteMeasure.from_weights(arity, merged)


def from_probabilities(probs: Mapping[Atom, object]) -> DiscreteMeasure:
    """Arity-1 measure from an ``{atom: weight}`` mapping."""
    return make_measure(((a,), w) for a, w in probs.items())


def uniform(tuples: Iterable[Sequence[Atom]]) -> DiscreteMeasure:
    ts = [tuple(t) for t in tuples]
    return make_measure((t, Fraction(1, len(ts))) for t in ts)


def tv_distance(mu: DiscreteMeasure, nu: DiscreteMeasure) -> Fraction:
    """L1 distance of the two pmfs, in [0, 2] (not halved)."""
    if mu.arity != nu.arity:
        raise MixedArity(f"arity {mu.arity} vs {nu.arity}")
    keys = set(mu.weights) | set(nu.weights)
    return sum((abs(mu[t] - nu[t]) for t in keys), Fraction(0))


def tensor_power(mu: DiscreteMeasure, k: int) -> DiscreteMeasure:
    if mu.arity != 1:
        raise ArityNotOne(f"tensor_power needs an arity-1 measure, got arity {mu.arity}")
    if k < 1:
        raise ValueError("k must be positive")
    if len(mu) ** k > ENUMERATION_GUARD:
        raise TooLargeToEnumerate(f"{len(mu)}^{k} tuples")
    items = [(t[0], w) for t, w in mu.items()]
    out = {}
    for combo in product(items, repeat=k):
        w = Fraction(1)
        for _, wi in combo:
            w *= wi
        out[tuple(a for a, _ in combo)] = w
    return DiscreteMeasure(k, out)


def product_measure(*measures: DiscreteMeasure) -> DiscreteMeasure:
    """Independent product; tuples are concatenated in argument order."""
    out: dict[tuple, Fraction] = {(): Fraction(1)}
    for mu in measures:
        nxt = {}
        for t, w in out.items():
            for s, v in mu.items():
                nxt[t + s] = w * v
        out = nxt
    return DiscreteMeasure(sum(m.arity for m in measures), out)


def mixture(pairs: Iterable[tuple[object, DiscreteMeasure]]) -> DiscreteMeasure:
    """Convex combination ``sum_i c_i * mu_i``; coefficients must sum to 1."""
    out: dict[tuple, Fraction] = {}
    arity = None
    total = Fraction(0)
    for c, mu in pairs:
        c = as_fraction(c)
        if c < 0:
            raise ValueError("negative mixture coefficient")
        if arity is None:
            arity = mu.arity
        elif mu.arity != arity:
            raise MixedArity(f"arity {mu.arity} vs {arity}")
        total += c
        for t, w in mu.items():
            out[t] = out.get(t, Fraction(0)) + c * w
    if arity is None or total != 1:
        raise NonNormalized(f"mixture coefficients sum to {total}")
    return DiscreteMeasure.from_weights(arity, out)


@dataclass(frozen=True, order=True)
class IndexPattern:
    """Collision shape of an index tuple, as a restricted growth string.

    ``slots[t]`` is the (0-based) block of position ``t``; blocks are
    numbered in order of first occurrence, so each set partition of the
    positions has exactly one representative.
    """

    slots: tuple[int, ...]

    def __post_init__(self):
        seen = -1
        for s in self.slots:
            if s > seen + 1 or s < 0:
                raise ValueError(f"{self.slots} is not a restricted growth string")
            seen = max(seen, s)

    @property
    def length(self) -> int:
        return len(self.slots)

    @property
    def image_size(self) -> int:
        return max(self.slots) + 1 if self.slots else 0

    @classmethod
    def of(cls, indices: Sequence) -> "IndexPattern":
        """Pattern of an arbitrary tuple: equal entries share a block."""
        first: dict = {}
        return cls(tuple(first.setdefault(x, len(first)) for x in indices))

    @classmethod
    def one_based(cls, labels: Sequence[int]) -> "IndexPattern":
        """Build from 1-based block labels, e.g. ``(1, 2, 1)``."""
        return cls(tuple(s - 1 for s in labels))

    @property
    def labels(self) -> tuple[int, ...]:
        """1-based block labels."""
        return tuple(s + 1 for s in self.slots)

    def apply(self, values: Sequence) -> tuple:
        return tuple(values[s] for s in self.slots)


def restricted_growth_strings(k: int) -> Iterator[tuple[int, ...]]:
    """All restricted growth strings of length ``k`` (Bell(k) of them)."""
    if k == 0:
        yield ()
        return

    def grow(prefix: list[int], top: int):
        if len(prefix) == k:
            yield tuple(prefix)
            return
        for s in range(top + 2):
            prefix.append(s)
            yield from grow(prefix, max(top, s))
            prefix.pop()

    yield from grow([0], 0)


def index_patterns(k: int, j: int | None = None) -> list[IndexPattern]:
    """Index patterns of length ``k``, optionally restricted to ``j`` blocks."""
    pats = [IndexPattern(s) for s in restricted_growth_strings(k)]
    if j is not None:
        pats = [p for p in pats if p.image_size == j]
    return pats


def push_forward_pattern(mu: DiscreteMeasure, p: IndexPattern) -> DiscreteMeasure:
    """Image of ``mu`` under ``(y_1..y_j) -> (y_p(1)..y_p(k))``."""
    if mu.arity != p.image_size:
        raise ArityMismatch(f"measure arity {mu.arity} vs pattern image size {p.image_size}")
    out: dict[tuple, Fraction] = {}
    for t, w in mu.items():
        key = p.apply(t)
        out[key] = out.get(key, Fraction(0)) + w
    return DiscreteMeasure(p.length, out)
