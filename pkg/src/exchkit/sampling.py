"""Seeded random draws: partial shuffles, categorical draws, mixture priors.

Randomness comes from :class:`RngStream`, a thin wrapper over numpy's
counter-based Philox generator keyed by ``(seed, stream_id, *path)``.
Streams never share state; independent substreams are derived with
:meth:`RngStream.child`.
"""
from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Mapping, Sequence

import numpy as np

from .combinatorics import Urn
from .errors import KOutOfRange, NonNormalized
from .measures import Atom, DiscreteMeasure, as_fraction, from_probabilities, mixture, tensor_power


class RngStream:
    """Deterministic random stream identified by ``(seed, stream_id, path)``."""

    def __init__(self, seed: int, stream_id: int = 0, path: tuple[int, ...] = ()):
        if not 0 <= seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if stream_id < 0:
            raise ValueError("stream_id must be nonnegative")
        self.seed = seed
        self.stream_id = stream_id
        self.path = tuple(path)
        ss = np.random.SeedSequence(entropy=seed, spawn_key=(stream_id, *self.path))
        self._gen = np.random.Generator(np.random.Philox(ss))

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id}, path={self.path})"

    def child(self, i: int) -> "RngStream":
        """Independent substream; does not advance this stream."""
        return RngStream(self.seed, self.stream_id, self.path + (i,))

    def below(self, n: int) -> int:
        """Uniform integer in ``range(n)``."""
        return int(self._gen.integers(n))

    def uniform(self) -> float:
        return float(self._gen.random())

    @property
    def generator(self) -> np.random.Generator:
        return self._gen


@dataclass(frozen=True)
class MixtureModel:
    """Finitely supported prior over probability vectors on an alphabet."""

    components: tuple[tuple[DiscreteMeasure, Fraction], ...]

    def __post_init__(self):
        comps = tuple((mu, as_fraction(w)) for mu, w in self.components)
        if not comps:
            raise NonNormalized("mixture has no components")
        for mu, w in comps:
            if mu.arity != 1:
                raise ValueError("mixture components must be arity-1 measures")
            if w < 0:
                raise ValueError("negative prior weight")
        total = sum((w for _, w in comps), Fraction(0))
        if total != 1:
            raise NonNormalized(f"prior weights sum to {total}")
        object.__setattr__(self, "components", tuple((mu, w) for mu, w in comps if w))

    @classmethod
    def of(cls, pairs: Sequence[tuple[Mapping[Atom, object] | DiscreteMeasure, object]]) -> "MixtureModel":
        """Accepts ``[({"a": "1/3", "b": "2/3"}, "1/2"), ...]``."""
        comps = []
        for p, w in pairs:
            mu = p if isinstance(p, DiscreteMeasure) else from_probabilities(p)
            comps.append((mu, as_fraction(w)))
        return cls(tuple(comps))

    @classmethod
    def point(cls, mu: DiscreteMeasure) -> "MixtureModel":
        return cls(((mu, Fraction(1)),))

    @cached_property
    def cdf(self) -> tuple[float, ...]:
        return cumulative([w for _, w in self.components])

    def law(self, k: int) -> DiscreteMeasure:
        """Exact law of k draws: the prior mixture of tensor powers."""
        return mixture((w, tensor_power(mu, k)) for mu, w in self.components)

    def mean(self) -> DiscreteMeasure:
        return mixture((w, mu) for mu, w in self.components)


def cumulative(weights: Sequence[Fraction]) -> tuple[float, ...]:
    """Exact cumulative sums, converted once to double precision."""
    acc = Fraction(0)
    out = []
    for w in weights:
        acc += w
        out.append(float(acc))
    out[-1] = 1.0
    return tuple(out)


@lru_cache(maxsize=4096)
def _measure_cdf(mu: DiscreteMeasure) -> tuple[tuple, tuple[float, ...]]:
    return mu.support, cumulative(list(mu.weights.values()))


def draw(values: Sequence, cdf: Sequence[float], rng: RngStream):
    """Inverse-CDF draw given a precomputed cumulative table."""
    i = bisect_right(cdf, rng.uniform())
    return values[min(i, len(values) - 1)]


def categorical(values: Sequence, weights: Sequence[Fraction], rng: RngStream):
    """Inverse-CDF draw of one of ``values``."""
    return draw(values, cumulative(weights), rng)


def draw_tuple(mu: DiscreteMeasure, rng: RngStream) -> tuple:
    """One tuple distributed as ``mu``."""
    support, cdf = _measure_cdf(mu)
    return draw(support, cdf, rng)


def sample_without_replacement(u: Urn, k: int, rng: RngStream) -> tuple:
    """k ordered draws without replacement via a k-step partial Fisher-Yates shuffle."""
    if not 1 <= k <= u.N:
        raise KOutOfRange(f"need 1 <= k <= N, got k={k}, N={u.N}")
    idx = list(range(u.N))
    for t in range(k):
        j = t + rng.below(u.N - t)
        idx[t], idx[j] = idx[j], idx[t]
    return tuple(u.points[i] for i in idx[:k])


def sample_iid(mu: DiscreteMeasure, k: int, rng: RngStream) -> tuple:
    if mu.arity != 1:
        raise ValueError("sample_iid needs an arity-1 measure")
    if k < 1:
        raise KOutOfRange(f"k must be positive, got {k}")
    support, cdf = _measure_cdf(mu)
    return tuple(draw(support, cdf, rng)[0] for _ in range(k))


def random_permutation(n: int, rng: RngStream) -> tuple[int, ...]:
    """Uniform permutation of ``range(n)`` (Fisher-Yates)."""
    if n < 1:
        raise ValueError("n must be positive")
    perm = list(range(n))
    for i in range(n - 1, 0, -1):
        j = rng.below(i + 1)
        perm[i], perm[j] = perm[j], perm[i]
    return tuple(perm)


def sample_directing_measure(m: MixtureModel, rng: RngStream) -> DiscreteMeasure:
    measures = [mu for mu, _ in m.components]
    return draw(measures, m.cdf, rng)
