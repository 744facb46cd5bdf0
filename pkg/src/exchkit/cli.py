"""Command-line runner producing byte-stable JSON/CSV reports.

Exit codes: 0 all checks passed, 1 a check failed, 2 invalid configuration,
3 an exact computation hit the enumeration guard.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Sequence

from . import __version__
from .combinatorics import (
    Urn,
    check_equality_condition,
    decompose_product_power,
    law_with_replacement,
    law_without_replacement,
    law_without_replacement_from_empirical,
    reconstruct,
    tv_gap_bounds,
)
from .convergence import convergence_report
from .errors import (
    ConfigInvalid,
    ExchkitError,
    InconsistentFamily,
    NotMultiExchangeable,
    TheoremViolation,
    TooLargeToEnumerate,
)
from .measures import DiscreteMeasure, tensor_power, tv_distance
from .multiclass import verify_sufficiency, verify_sufficiency_mc
from .serialize import family_from_json, frac_str, load_json, spec_from_json

log = logging.getLogger("exchkit")

COMMANDS = ("exact-law", "tv-bound", "verify-decomposition", "resample-test", "sufficiency", "convergence")
STOCHASTIC = ("resample-test",)

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_GUARD = 0, 1, 2, 3


@dataclass
class ExperimentConfig:
    command: str
    seed: int | None = None
    reps: int | None = None
    out: str | None = None
    format: str = "json"
    urn: str | None = None
    N: int | None = None
    k: int | None = None
    mode: str = "both"
    spec: str | None = None
    family: str | None = None
    degree: int = 3
    tol: float = 1e-3
    threads: int = field(default=1, compare=False)

    def echo(self) -> dict:
        """Config fields that affect results (threads, out and format excluded)."""
        keys = {
            "exact-law": ("urn", "k", "mode"),
            "tv-bound": ("N", "k"),
            "verify-decomposition": ("urn", "k"),
            "resample-test": ("spec", "k"),
            "sufficiency": ("spec",),
            "convergence": ("family", "k", "degree", "tol"),
        }[self.command]
        d = {"command": self.command}
        for key in keys:
            d[key] = getattr(self, key)
        if self.spec and "spec" in d:
            d["spec"] = Path(self.spec).name
        if self.family and "family" in d:
            d["family"] = Path(self.family).name
        return d


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="exchkit", description=__doc__.splitlines()[0])
    p.add_argument("command", nargs="?", choices=COMMANDS)
    p.add_argument("--config", help="JSON file with any of the options below")
    p.add_argument("--seed", type=int)
    p.add_argument("--reps", type=int)
    p.add_argument("--out", help="report path (stdout if omitted)")
    p.add_argument("--format", choices=("json", "csv"))
    p.add_argument("--urn", help="comma-separated urn points, e.g. a,a,b")
    p.add_argument("--N", type=int, dest="N")
    p.add_argument("--k", type=int)
    p.add_argument("--mode", choices=("without", "with", "both"))
    p.add_argument("--spec", help="system spec JSON")
    p.add_argument("--family", help="system family JSON")
    p.add_argument("--degree", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def resolve_config(args: argparse.Namespace, env: dict | None = None) -> ExperimentConfig:
    """Merge flags > environment > config file > defaults and validate."""
    env = os.environ if env is None else env
    merged: dict[str, Any] = {}
    base = Path(".")
    if args.config:
        doc = load_json(args.config)
        if not isinstance(doc, dict):
            raise ConfigInvalid("config file must hold a JSON object")
        base = Path(args.config).parent
        merged.update(doc)
        for key in ("spec", "family"):
            if key in merged and merged[key] is not None:
                merged[key] = str(base / merged[key])
    if "EXCHKIT_SEED" in env and env["EXCHKIT_SEED"] != "":
        try:
            merged["seed"] = int(env["EXCHKIT_SEED"])
        except ValueError as e:
            raise ConfigInvalid("EXCHKIT_SEED must be an integer") from e
    for key in ("command", "seed", "reps", "out", "format", "urn", "N", "k", "mode", "spec", "family", "degree", "tol"):
        val = getattr(args, key, None)
        if val is not None:
            merged[key] = val
    try:
        merged["threads"] = int(env.get("EXCHKIT_THREADS", 1) or 1)
    except ValueError as e:
        raise ConfigInvalid("EXCHKIT_THREADS must be an integer") from e
    unknown = set(merged) - set(ExperimentConfig.__dataclass_fields__)
    if unknown:
        raise ConfigInvalid(f"unknown config keys: {sorted(unknown)}")
    if merged.get("command") not in COMMANDS:
        raise ConfigInvalid(f"command must be one of {COMMANDS}")
    cfg = ExperimentConfig(**merged)
    _validate(cfg)
    return cfg


def _validate(cfg: ExperimentConfig) -> None:
    def need(*names):
        for n in names:
            if getattr(cfg, n) is None:
                raise ConfigInvalid(f"{cfg.command} needs --{n}")

    if cfg.format not in ("json", "csv"):
        raise ConfigInvalid("format must be json or csv")
    if cfg.reps is not None and cfg.reps < 1:
        raise ConfigInvalid("reps must be >= 1")
    if cfg.seed is not None and not 0 <= cfg.seed < 2**64:
        raise ConfigInvalid("seed must be an unsigned 64-bit integer")
    if cfg.threads < 1:
        raise ConfigInvalid("EXCHKIT_THREADS must be >= 1")
    c = cfg.command
    if c in ("exact-law", "verify-decomposition"):
        need("urn", "k")
        if cfg.mode not in ("without", "with", "both"):
            raise ConfigInvalid("mode must be without, with or both")
    elif c == "tv-bound":
        need("N", "k")
    elif c in ("resample-test", "sufficiency"):
        need("spec")
        if not Path(cfg.spec).is_file():
            raise ConfigInvalid(f"spec file {cfg.spec} does not exist")
    elif c == "convergence":
        need("family")
        if not Path(cfg.family).is_file():
            raise ConfigInvalid(f"family file {cfg.family} does not exist")
        if cfg.k is None:
            cfg.k = 2
        if cfg.reps is not None and cfg.seed is None:
            raise ConfigInvalid("Monte Carlo convergence needs a seed")
    if c in STOCHASTIC:
        if cfg.seed is None:
            raise ConfigInvalid(f"{c} is stochastic and needs --seed (or EXCHKIT_SEED)")
        if cfg.reps is None:
            raise ConfigInvalid(f"{c} needs --reps")
        if cfg.k is None:
            cfg.k = 2
    if cfg.k is not None and cfg.k < 1:
        raise ConfigInvalid("k must be >= 1")


# --- commands ---------------------------------------------------------------------


def _measure_doc(mu: DiscreteMeasure) -> list:
    return [{"tuple": list(t), "p": w} for t, w in mu.items()]


def _parse_urn(text: str) -> Urn:
    try:
        return Urn.parse(text)
    except ValueError as e:
        raise ConfigInvalid(str(e)) from e


def _cmd_exact_law(cfg: ExperimentConfig):
    u = _parse_urn(cfg.urn)
    res: dict[str, Any] = {"N": u.N, "k": cfg.k}
    checks = {}
    laws = {}
    if cfg.mode in ("without", "both"):
        laws["without_replacement"] = law_without_replacement(u, cfg.k)
    if cfg.mode in ("with", "both"):
        laws["with_replacement"] = law_with_replacement(u, cfg.k)
    for name, mu in laws.items():
        res[name] = _measure_doc(mu)
        checks[f"{name}_normalized"] = mu.total() == 1
    if cfg.mode == "both":
        b = tv_gap_bounds(u.N, cfg.k)
        tv = tv_distance(laws["without_replacement"], laws["with_replacement"])
        res.update(tv_distance=tv, exact_gap_bound=b.exact_gap_bound, coarse_bound=b.coarse_bound)
        checks["tv_within_bound"] = tv <= b.exact_gap_bound <= b.coarse_bound
        eq = check_equality_condition(u, cfg.k)
        res["bound_attained"] = eq.is_equality
        res["all_points_distinct"] = u.all_distinct()
    return res, checks


def _cmd_tv_bound(cfg: ExperimentConfig):
    b = tv_gap_bounds(cfg.N, cfg.k)
    res = {"N": cfg.N, "k": cfg.k, "exact_gap_bound": b.exact_gap_bound, "coarse_bound": b.coarse_bound}
    return res, {"exact_le_coarse": b.exact_gap_bound <= b.coarse_bound, "exact_le_2": b.exact_gap_bound <= 2}


def _cmd_verify_decomposition(cfg: ExperimentConfig):
    u = _parse_urn(cfg.urn)
    terms = decompose_product_power(u, cfg.k)
    target = tensor_power(u.empirical(), cfg.k)
    rebuilt = reconstruct(terms)
    direct = law_without_replacement(u, cfg.k)
    res = {
        "N": u.N,
        "k": cfg.k,
        "terms": [
            {"distinct_indices": j, "coefficient": c, "measure": _measure_doc(mu)}
            for j, (c, mu) in enumerate(terms, start=1)
        ],
        "tensor_power": _measure_doc(target),
    }
    checks = {
        "reconstruction_exact": rebuilt == target,
        "top_term_is_without_replacement": terms[-1][1] == direct,
        "coefficients_sum_to_one": sum((c for c, _ in terms), Fraction(0)) == 1,
        "recursion_from_empirical_exact": law_without_replacement_from_empirical(u.empirical(), u.N, cfg.k) == direct,
    }
    return res, checks


def _cmd_sufficiency(cfg: ExperimentConfig):
    spec = spec_from_json(load_json(cfg.spec))
    rep = verify_sufficiency(spec)
    res = rep.to_json()
    res.pop("pass")
    checks = {
        "law_preserved": rep.law_preserved,
        "conditional_matches_kernel": rep.conditional_matches_kernel,
        "factorizes": rep.factorizes,
    }
    return res, checks


def _cmd_resample_test(cfg: ExperimentConfig):
    spec = spec_from_json(load_json(cfg.spec))
    rep = verify_sufficiency_mc(spec, cfg.reps, cfg.seed, k=cfg.k, threads=cfg.threads)
    res = {
        "n_sigma": rep.n_sigma,
        "moments": [
            {
                "name": r.name,
                "original": r.original,
                "resampled": r.resampled,
                "stderr": r.stderr,
                "z": r.z,
                "pass": r.passed,
            }
            for r in rep.rows
        ],
    }
    checks = {"measure_vector_preserved": rep.measure_vector_preserved}
    checks.update({f"moment[{r.name}]": r.passed for r in rep.rows})
    return res, checks


def _cmd_convergence(cfg: ExperimentConfig):
    fam = family_from_json(load_json(cfg.family))
    rep = convergence_report(fam, k=cfg.k, degree=cfg.degree, tolerance=cfg.tol, reps=cfg.reps, seed=cfg.seed)
    res = rep.to_json()
    checks = {
        "reconstruction_exact": rep.reconstruction_exact,
        "vector_as_fdd_exact": rep.vector_as_fdd_exact,
        "transfer_bounds_hold": rep.transfer_bounds_hold,
        "vector_to_system": rep.verdict["vector_to_system"] == "SUPPORTS_EQUIVALENCE",
        "system_to_vector": rep.verdict["system_to_vector"] == "SUPPORTS_EQUIVALENCE",
    }
    return res, {k: v for k, v in checks.items() if v is not None}


HANDLERS = {
    "exact-law": _cmd_exact_law,
    "tv-bound": _cmd_tv_bound,
    "verify-decomposition": _cmd_verify_decomposition,
    "resample-test": _cmd_resample_test,
    "sufficiency": _cmd_sufficiency,
    "convergence": _cmd_convergence,
}


# --- report emission ---------------------------------------------------------------


def _plain(x):
    """Rationals -> "p/q"; floats -> 17 significant digits; containers recursively."""
    if isinstance(x, bool) or x is None or isinstance(x, (int, str)):
        return x
    if isinstance(x, Fraction):
        return frac_str(x)
    if isinstance(x, float):
        if math.isnan(x) or math.isinf(x):
            return str(x)
        return format(x, ".17g")
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    raise TypeError(f"cannot serialize {type(x).__name__}")


def _flatten(x, prefix: str = "") -> list[tuple[str, str]]:
    rows = []
    if isinstance(x, dict):
        for k in sorted(x):
            rows += _flatten(x[k], f"{prefix}.{k}" if prefix else k)
    elif isinstance(x, list):
        for i, v in enumerate(x):
            rows += _flatten(v, f"{prefix}[{i}]")
    else:
        if isinstance(x, bool):
            val = "true" if x else "false"
        elif x is None:
            val = ""
        else:
            val = str(x)
        rows.append((prefix, val))
    return rows


def render_report(report: dict, fmt: str) -> str:
    plain = _plain(report)
    if fmt == "json":
        return json.dumps(plain, sort_keys=True, indent=2) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["key", "value"])
    w.writerows(_flatten(plain))
    return buf.getvalue()


def emit_report(report: dict, fmt: str, out: str | None) -> None:
    text = render_report(report, fmt)
    if out is None:
        sys.stdout.write(text)
        return
    try:
        Path(out).write_text(text)
    except OSError as e:
        raise ConfigInvalid(f"cannot write report to {out}: {e}") from e


def run(cfg: ExperimentConfig) -> int:
    """Execute one experiment, write its report and return the exit code."""
    report: dict[str, Any] = {
        "tool": "exchkit",
        "version": __version__,
        "config": cfg.echo(),
        "seed": cfg.seed,
        "reps": cfg.reps,
    }
    log.debug("running %s with %s", cfg.command, cfg.echo())
    try:
        results, checks = HANDLERS[cfg.command](cfg)
        code = EXIT_OK if all(checks.values()) else EXIT_FAIL
    except (NotMultiExchangeable, InconsistentFamily, TheoremViolation) as e:
        results, checks = {"error": type(e).__name__, "message": str(e)}, {"hypotheses_hold": False}
        code = EXIT_FAIL
    except TooLargeToEnumerate as e:
        results, checks = {"error": "EnumerationGuard", "message": str(e)}, {"within_enumeration_guard": False}
        code = EXIT_GUARD
    report["results"] = results
    report["checks"] = checks
    report["pass"] = code == EXIT_OK
    emit_report(report, cfg.format, cfg.out)
    return code


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = resolve_config(args)
        return run(cfg)
    except ConfigInvalid as e:
        print(f"exchkit: config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except ExchkitError as e:
        # remaining domain errors (KOutOfRange, NonNormalized, ...) are bad inputs
        print(f"exchkit: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
