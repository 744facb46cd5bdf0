"""Convergence of system moments versus convergence of measure-vector moments.

For a family of systems indexed by r (plus a LIMIT member) this module
computes, on a grid of r values, the largest deviation from the limit of

* system moments: expectations of products of per-class indicators of the
  first k_i coordinates (k_i = N_i for finite classes, k for infinite ones);
* measure-vector moments: expectations of monomials of degree <= d in the
  per-class atom probabilities.

Each system moment is exactly a polynomial in the measure vector (finite
classes through the collision recursion, infinite classes through tensor
powers), and each vector moment is a system moment of the right test
function. Both identities are checked exactly and turned into transfer
constants between the two gap sequences.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations_with_replacement, product
from typing import Callable, Mapping, Sequence

import numpy as np

from .combinatorics import Polynomial, without_replacement_polynomials
from .errors import BlackBoxLaw, InconsistentFamily
from .multiclass import (
    MeasureVector,
    SystemSpec,
    check_latent_exchangeability,
    check_multi_exchangeability,
    empirical_measure,
    joint_law_exact,
    measure_vector,
)
from .sampling import RngStream

LIMIT = "LIMIT"

SUPPORTS = "SUPPORTS_EQUIVALENCE"
CONTRADICTS = "CONTRADICTS_EQUIVALENCE"

# A monomial: sorted tuple of ((class_index, atom), exponent); () is the constant 1.
Monomial = tuple


@dataclass(frozen=True)
class Estimate:
    value: float
    stderr: float


@dataclass(frozen=True)
class SystemFamily:
    """Specs indexed by positive reals r, plus the key :data:`LIMIT`."""

    spec_at: Mapping[object, SystemSpec]

    def __post_init__(self):
        if LIMIT not in self.spec_at:
            raise InconsistentFamily("family has no LIMIT member")
        ref = self.spec_at[LIMIT].structure()
        for r, s in self.spec_at.items():
            if r != LIMIT and not (isinstance(r, (int, float, Fraction)) and r > 0):
                raise InconsistentFamily(f"grid value {r!r} is not a positive real")
            if s.structure() != ref:
                raise InconsistentFamily(f"class structure at r={r} differs from the limit")

    @property
    def grid(self) -> list:
        return sorted(r for r in self.spec_at if r != LIMIT)

    @property
    def limit(self) -> SystemSpec:
        return self.spec_at[LIMIT]


# --- test functions -----------------------------------------------------------


def coordinate_counts(spec: SystemSpec, k: int) -> list[int]:
    """k_i: N_i for a finite class, k for an infinite one."""
    return [k if c.is_infinite else c.size for c in spec.classes]


def indicator_tests(spec: SystemSpec, k: int) -> list[tuple[tuple, ...]]:
    """Per-class patterns; the test function is the product of indicators
    ``x_i[:k_i] == pattern_i``. These span all functions of the k_i coords."""
    per_class = [list(product(c.alphabet, repeat=n)) for c, n in zip(spec.classes, coordinate_counts(spec, k))]
    return list(product(*per_class))


def test_name(patterns: tuple[tuple, ...]) -> str:
    return ";".join(f"{i}:{''.join(map(str, p))}" for i, p in enumerate(patterns))


def vector_battery(spec: SystemSpec, degree: int) -> list[Monomial]:
    variables = [(i, a) for i, c in enumerate(spec.classes) for a in c.alphabet]
    out = []
    for d in range(1, degree + 1):
        for combo in combinations_with_replacement(variables, d):
            exps: dict = {}
            for v in combo:
                exps[v] = exps.get(v, 0) + 1
            out.append(tuple(sorted(exps.items())))
    return out


def monomial_name(m: Monomial) -> str:
    if not m:
        return "1"
    return "*".join(f"L{i}({a})" + (f"^{e}" if e > 1 else "") for (i, a), e in m)


def monomial_value(m: Monomial, v: MeasureVector) -> Fraction:
    out = Fraction(1)
    for (i, a), e in m:
        out *= v[i][a] ** e
    return out


# --- moments -------------------------------------------------------------------


def fdd_moment(
    spec: SystemSpec,
    fs: Sequence[Callable[[tuple], object]],
    k: int,
    reps: int | None = None,
    seed: int | None = None,
) -> Fraction | Estimate:
    """E[prod_i f_i(first k_i coordinates of class i)].

    Exact (a Fraction) for exact specs unless ``reps`` is given; otherwise a
    Monte Carlo :class:`Estimate` from ``reps`` seeded draws.
    """
    if k < 1:
        raise ValueError("k must be positive")
    counts = coordinate_counts(spec, k)

    def value(blocks):
        out = 1
        for f, b, n in zip(fs, blocks, counts):
            out = out * f(tuple(b[:n]))
        return out

    if reps is None:
        if not spec.exact:
            raise BlackBoxLaw("exact moments need an exact spec; pass reps for Monte Carlo")
        joint = joint_law_exact(spec, truncation=k)
        return sum((w * value(spec.split(x, k)) for x, w in joint.items()), Fraction(0))
    rng = RngStream(_need_seed(seed))
    spec = _deep_enough(spec, k)
    return _mc_mean([float(value(spec.sample(rng).blocks)) for _ in range(reps)])


def vector_law(spec: SystemSpec) -> dict[MeasureVector, Fraction]:
    """Exact law of the measure vector of an exact spec."""
    if not spec.exact:
        raise BlackBoxLaw("exact vector law needs an exact spec")
    fin = spec.finite_indices
    sizes = [spec.classes[i].size for i in fin]
    out: dict[MeasureVector, Fraction] = {}
    for comp in spec.components:
        items = comp.finite_law.items() if comp.finite_law is not None else [((), Fraction(1))]
        for t, w in items:
            measures: list = [None] * len(spec.classes)
            pos = 0
            for i, n in zip(fin, sizes):
                measures[i] = empirical_measure(t[pos : pos + n])
                pos += n
            for i, q in zip(spec.infinite_indices, comp.directing):
                measures[i] = q
            v = MeasureVector(tuple(measures))
            out[v] = out.get(v, Fraction(0)) + comp.weight * w
    return out


def vector_moment(
    spec: SystemSpec,
    g: Monomial | Callable[[MeasureVector], object],
    reps: int | None = None,
    seed: int | None = None,
    estimate_missing: bool = True,
) -> Fraction | Estimate:
    """E[g(measure vector)]; ``g`` is a monomial or any function of the vector."""
    fn = g if callable(g) else (lambda v, m=g: monomial_value(m, v))
    if reps is None:
        return sum((w * fn(v) for v, w in vector_law(spec).items()), Fraction(0))
    rng = RngStream(_need_seed(seed))
    vals = []
    for _ in range(reps):
        r = spec.sample(rng)
        if not estimate_missing and any(inf and q is None for inf, q in zip(r.infinite, r.directing)):
            raise BlackBoxLaw("sampler does not expose directing measures")
        vals.append(float(fn(measure_vector(r))))
    return _mc_mean(vals)


def _deep_enough(spec: SystemSpec, k: int) -> SystemSpec:
    """Exact specs are sampled with at least k coordinates per infinite class."""
    if spec.exact and spec.infinite_indices:
        M = max(spec.classes[i].truncation for i in spec.infinite_indices)
        return spec.with_truncation(max(M, k))
    return spec


def _need_seed(seed):
    if seed is None:
        raise ValueError("Monte Carlo moments need a seed")
    return seed


def _mc_mean(vals: Sequence[float]) -> Estimate:
    a = np.asarray(vals, dtype=float)
    se = float(a.std(ddof=1) / math.sqrt(len(a))) if len(a) > 1 else math.inf
    return Estimate(float(a.mean()), se)


# --- polynomial transfer between the two kinds of moments -----------------------


def fdd_polynomial(spec: SystemSpec, patterns: tuple[tuple, ...], k: int) -> Polynomial:
    """Polynomial P in the measure-vector coordinates with
    E[indicator test] = E[P(measure vector)].

    A finite class contributes lambda^{N,N} at its pattern, written as a
    polynomial in its empirical weights; an infinite class contributes the
    product of its directing weights along the pattern.
    """
    out = Polynomial.const(1)
    for i, (c, pat) in enumerate(zip(spec.classes, patterns)):
        if c.is_infinite:
            term = Polynomial.const(1)
            for a in pat:
                term = term * Polynomial.var((i, a))
        else:
            polys = _wr_polys(c.size, c.alphabet)
            term = polys[pat].relabel(lambda a, i=i: (i, a))
        out = out * term
    return out


_POLY_CACHE: dict = {}


def _wr_polys(n: int, alphabet: tuple):
    key = (n, alphabet)
    if key not in _POLY_CACHE:
        _POLY_CACHE[key] = without_replacement_polynomials(n, n, alphabet)
    return _POLY_CACHE[key]


def monomial_as_system_test(spec: SystemSpec, m: Monomial) -> tuple[Callable[[tuple], Fraction], list[int]]:
    """A function F of the system's first coordinates with E[F] = E[m(vector)].

    Finite class: m's factor evaluated at the empirical measure of the whole
    block. Infinite class with degree e: indicator that the first e
    coordinates spell the factor's atoms (conditionally i.i.d.). Returns F on
    per-class blocks and the number of coordinates it reads per class.
    """
    factors: dict[int, list] = {}
    for (i, a), e in m:
        factors.setdefault(i, []).extend([a] * e)
    needs = []
    for i, c in enumerate(spec.classes):
        needs.append(len(factors.get(i, [])) if c.is_infinite else c.size)

    def F(blocks):
        out = Fraction(1)
        for i, atoms in factors.items():
            b = blocks[i]
            if spec.classes[i].is_infinite:
                if tuple(b[: len(atoms)]) != tuple(atoms):
                    return Fraction(0)
            else:
                mu = empirical_measure(b)
                for a in atoms:
                    out *= mu[a]
        return out

    return F, needs


def monomial_test_norm(spec: SystemSpec, m: Monomial, k: int) -> Fraction | None:
    """l1 norm of F_m in the indicator basis of the k_i-coordinate battery,
    or None if F_m reads more than k coordinates of an infinite class."""
    _, needs = monomial_as_system_test(spec, m)
    factors: dict[int, list] = {}
    for (i, a), e in m:
        factors.setdefault(i, []).extend([a] * e)
    norm = Fraction(1)
    for i, c in enumerate(spec.classes):
        if c.is_infinite:
            if needs[i] > k:
                return None
            norm *= len(c.alphabet) ** (k - needs[i])
        elif i in factors:
            s = Fraction(0)
            for y in product(c.alphabet, repeat=c.size):
                mu = empirical_measure(y)
                val = Fraction(1)
                for a in factors[i]:
                    val *= mu[a]
                s += val
            norm *= s
        else:
            norm *= len(c.alphabet) ** c.size
    return norm


# --- report ----------------------------------------------------------------------


@dataclass
class ConvergenceReport:
    grid: list
    k: int
    degree: int
    tolerance: float
    exact: bool
    fdd_gap: dict
    vector_gap: dict
    vector_gap_by_monomial: dict
    fdd_bound: dict | None
    image_gap: dict | None
    fdd_tolerance: float
    vector_tolerance: float
    transfer_constants: dict
    reconstruction_exact: bool | None
    vector_as_fdd_exact: bool | None
    transfer_bounds_hold: bool | None
    fdd_monotone: bool
    vector_monotone: bool
    rates: dict
    verdict: dict
    stderr: dict | None = None

    def to_json(self) -> dict:
        def key(r):
            return str(r)

        return {
            "grid": [key(r) for r in self.grid],
            "k": self.k,
            "degree": self.degree,
            "tolerance": self.tolerance,
            "exact": self.exact,
            "fdd_gap": {key(r): v for r, v in self.fdd_gap.items()},
            "vector_gap": {key(r): v for r, v in self.vector_gap.items()},
            "vector_gap_by_monomial": {
                name: {key(r): v for r, v in row.items()} for name, row in self.vector_gap_by_monomial.items()
            },
            "fdd_bound": None if self.fdd_bound is None else {key(r): v for r, v in self.fdd_bound.items()},
            "image_gap": None if self.image_gap is None else {key(r): v for r, v in self.image_gap.items()},
            "fdd_tolerance": self.fdd_tolerance,
            "vector_tolerance": self.vector_tolerance,
            "transfer_constants": self.transfer_constants,
            "reconstruction_exact": self.reconstruction_exact,
            "vector_as_fdd_exact": self.vector_as_fdd_exact,
            "transfer_bounds_hold": self.transfer_bounds_hold,
            "fdd_monotone": self.fdd_monotone,
            "vector_monotone": self.vector_monotone,
            "rates": self.rates,
            "verdict": self.verdict,
            "stderr": None
            if self.stderr is None
            else {name: {key(r): v for r, v in row.items()} for name, row in self.stderr.items()},
        }

    @property
    def passed(self) -> bool:
        checks = [self.reconstruction_exact, self.vector_as_fdd_exact, self.transfer_bounds_hold]
        return all(v is not False for v in checks) and all(v == SUPPORTS for v in self.verdict.values())


def _check_family(fam: SystemFamily, k: int) -> None:
    for r, s in fam.spec_at.items():
        if not s.exact:
            continue
        if not (check_multi_exchangeability(joint_law_exact(s, k), s, k) and check_latent_exchangeability(s, k)):
            raise InconsistentFamily(f"member r={r} is not multi-exchangeable")


def _non_increasing(vals: Sequence) -> bool:
    return all(b <= a for a, b in zip(vals, vals[1:]))


def _rate(grid: Sequence, gaps: Sequence) -> float | None:
    pts = [(float(r), float(g)) for r, g in zip(grid, gaps) if g > 0]
    if len(pts) < 2:
        return None
    x = np.log([p[0] for p in pts])
    y = np.log([p[1] for p in pts])
    return float(np.polyfit(x, y, 1)[0])


def convergence_report(
    fam: SystemFamily,
    k: int = 2,
    degree: int = 3,
    tolerance: float = 1e-3,
    reps: int | None = None,
    seed: int | None = None,
) -> ConvergenceReport:
    """Grid-based check that system moments converge iff vector moments do.

    Exact when every member is an exact spec and ``reps`` is None; otherwise
    Monte Carlo with ``reps`` draws per member (member j uses stream j).
    """
    if k < 1 or degree < 1 or tolerance <= 0:
        raise ValueError("need k >= 1, degree >= 1 and a positive tolerance")
    _check_family(fam, k)
    limit = fam.limit
    grid = fam.grid
    members = grid + [LIMIT]
    exact = reps is None and all(s.exact for s in fam.spec_at.values())
    if reps is None and not exact:
        raise BlackBoxLaw("family has sampler-only members; pass reps and seed")

    tests = indicator_tests(limit, k)
    monomials = vector_battery(limit, degree)
    images = {t: fdd_polynomial(limit, t, k) for t in tests}
    image_monos = sorted({m for p in images.values() for m in p.terms if m})
    norms = {m: monomial_test_norm(limit, m, k) for m in monomials}
    expressible = [m for m in monomials if norms[m] is not None]
    L_vf = max((p.l1_norm() - abs(p.terms.get((), 0)) for p in images.values()), default=Fraction(0))
    L_fv = max((norms[m] for m in expressible), default=Fraction(0))

    fdd: dict = {}
    vec: dict = {}
    img: dict = {}
    stderr: dict | None = None if exact else {}
    reconstruction_ok = vector_fdd_ok = True if exact else None

    for j, r in enumerate(members):
        s = fam.spec_at[r]
        if exact:
            joint = joint_law_exact(s, k)
            vlaw = vector_law(s)
            # truncated at k, every block is exactly the k_i coordinates a test reads
            fdd[r] = {t: joint[tuple(a for p in t for a in p)] for t in tests}
            needed = set(monomials) | set(image_monos)
            moments = {m: sum((w * monomial_value(m, v) for v, w in vlaw.items()), Fraction(0)) for m in needed}
            vec[r] = {m: moments[m] for m in monomials}
            img[r] = {m: moments[m] for m in image_monos}
            for t, poly in images.items():
                rebuilt = poly.terms.get((), Fraction(0)) + sum(
                    (c * moments[m] for m, c in poly.terms.items() if m), Fraction(0)
                )
                reconstruction_ok = reconstruction_ok and rebuilt == fdd[r][t]
            deep = max(k, degree)
            joint_deep = joint_law_exact(s, deep)
            for m in monomials:
                F, _ = monomial_as_system_test(s, m)
                via_fdd = sum((w * F(s.split(x, deep)) for x, w in joint_deep.items()), Fraction(0))
                vector_fdd_ok = vector_fdd_ok and via_fdd == vec[r][m]
        else:
            fdd[r], vec[r], se = _mc_member(s, tests, monomials, k, reps, RngStream(_need_seed(seed), j))
            stderr[str(r)] = se

    def gap_table(values: dict, keys) -> dict:
        return {r: max((abs(values[r][t] - values[LIMIT][t]) for t in keys), default=0) for r in members}

    fdd_gap = gap_table(fdd, tests)
    vector_gap = gap_table(vec, monomials)
    by_mono = {
        monomial_name(m): {r: abs(vec[r][m] - vec[LIMIT][m]) for r in members} for m in monomials
    }

    fdd_bound = image_gap = None
    bounds_ok = None
    if exact:
        image_gap = gap_table(img, image_monos)
        fdd_bound = {
            r: max(
                (
                    sum((abs(c) * abs(img[r][m] - img[LIMIT][m]) for m, c in p.terms.items() if m), Fraction(0))
                    for p in images.values()
                ),
                default=Fraction(0),
            )
            for r in members
        }
        bounds_ok = all(fdd_gap[r] <= fdd_bound[r] for r in members) and all(
            abs(vec[r][m] - vec[LIMIT][m]) <= norms[m] * fdd_gap[r] for r in members for m in expressible
        )

    tol_fdd = float(L_vf) * tolerance
    tol_vec = float(L_fv) * tolerance
    premise_1 = {r: max(vector_gap[r], image_gap[r]) if exact else vector_gap[r] for r in grid}
    dir1 = all(fdd_gap[r] < tol_fdd for r in grid if premise_1[r] < tolerance)
    dir2 = all(vector_gap[r] < tol_vec for r in grid if fdd_gap[r] < tolerance)
    verdict = {
        "vector_to_system": SUPPORTS if dir1 and reconstruction_ok is not False and bounds_ok is not False else CONTRADICTS,
        "system_to_vector": SUPPORTS if dir2 and vector_fdd_ok is not False and bounds_ok is not False else CONTRADICTS,
    }
    fdd_seq = [fdd_gap[r] for r in grid]
    vec_seq = [vector_gap[r] for r in grid]
    return ConvergenceReport(
        grid=grid,
        k=k,
        degree=degree,
        tolerance=tolerance,
        exact=exact,
        fdd_gap=fdd_gap,
        vector_gap=vector_gap,
        vector_gap_by_monomial=by_mono,
        fdd_bound=fdd_bound,
        image_gap=image_gap,
        fdd_tolerance=tol_fdd,
        vector_tolerance=tol_vec,
        transfer_constants={
            "vector_to_system": L_vf,
            "system_to_vector": L_fv,
            "excluded_monomials": [monomial_name(m) for m in monomials if norms[m] is None],
        },
        reconstruction_exact=reconstruction_ok,
        vector_as_fdd_exact=vector_fdd_ok,
        transfer_bounds_hold=bounds_ok,
        fdd_monotone=_non_increasing(fdd_seq),
        vector_monotone=_non_increasing(vec_seq),
        rates={"fdd": _rate(grid, fdd_seq), "vector": _rate(grid, vec_seq)},
        verdict=verdict,
        stderr=stderr,
    )


def _mc_member(spec: SystemSpec, tests, monomials, k: int, reps: int, rng: RngStream):
    spec = _deep_enough(spec, k)
    counts = coordinate_counts(spec, k)
    f_acc = np.zeros(len(tests))
    f_sq = np.zeros(len(tests))
    v_acc = np.zeros(len(monomials))
    v_sq = np.zeros(len(monomials))
    for _ in range(reps):
        r = spec.sample(rng)
        heads = tuple(tuple(b[:n]) for b, n in zip(r.blocks, counts))
        fv = np.array([1.0 if heads == t else 0.0 for t in tests])
        v = measure_vector(r)
        vv = np.array([float(monomial_value(m, v)) for m in monomials])
        f_acc += fv
        f_sq += fv * fv
        v_acc += vv
        v_sq += vv * vv

    def se(acc, sq):
        mean = acc / reps
        var = np.maximum(sq / reps - mean * mean, 0.0) * reps / max(reps - 1, 1)
        return mean, np.sqrt(var / reps)

    fm, fse = se(f_acc, f_sq)
    vm, vse = se(v_acc, v_sq)
    errs = {test_name(t): float(e) for t, e in zip(tests, fse)}
    errs.update({monomial_name(m): float(e) for m, e in zip(monomials, vse)})
    return (
        {t: float(x) for t, x in zip(tests, fm)},
        {m: float(x) for m, x in zip(monomials, vm)},
        errs,
    )
