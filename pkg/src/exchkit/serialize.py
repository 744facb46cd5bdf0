"""JSON documents for system specs and families.

Rationals are written as "p/q" strings. A spec document looks like::

    {
      "classes": [
        {"name": "F", "size": 2, "alphabet": ["a", "b"]},
        {"name": "I", "size": "inf", "truncation": 2, "alphabet": ["a", "b"]}
      ],
      "components": [
        {"weight": "1/2",
         "laws": [{"tuples": [{"tuple": ["a", "b"], "p": "1/2"},
                              {"tuple": ["b", "a"], "p": "1/2"}]},
                  {"iid": {"a": "1"}}]},
        {"weight": "1/2",
         "laws": [{"iid": {"a": "1/3", "b": "2/3"}}, {"iid": {"b": "1"}}]}
      ]
    }

Each component may instead give ``"finite_joint"`` (the law of the
concatenated finite-class tuples) plus ``"directing"`` (one ``{atom: p}``
map per infinite class). ``"independent"`` replaces ``"components"`` with
one law per class, where ``{"mixture": [{"weight": w, "iid": {...}}, ...]}``
is a finite prior over i.i.d. laws. A family document is
``{"spec_at": {"1": spec, "2": spec, ..., "LIMIT": spec}}``.
"""
from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path
from typing import Any, Mapping

from .convergence import LIMIT, SystemFamily
from .errors import ConfigInvalid
from .measures import DiscreteMeasure, as_fraction, from_probabilities, make_measure
from .multiclass import ClassSpec, LatentComponent, SystemSpec
from .sampling import MixtureModel


def frac_str(x: Fraction) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def _class_from_json(doc: Mapping) -> ClassSpec:
    size = doc.get("size")
    alphabet = tuple(doc.get("alphabet", ()))
    if size in ("inf", "infinite", None):
        return ClassSpec.infinite(alphabet, int(doc.get("truncation", 0)), doc.get("name"))
    return ClassSpec.finite(int(size), alphabet, doc.get("name"))


def _law_from_json(doc: Mapping) -> DiscreteMeasure | MixtureModel:
    if "iid" in doc:
        return from_probabilities({a: as_fraction(p) for a, p in doc["iid"].items()})
    if "tuples" in doc:
        return make_measure((tuple(e["tuple"]), as_fraction(e["p"])) for e in doc["tuples"])
    if "entries" in doc:
        return DiscreteMeasure.from_json(doc)
    if "mixture" in doc:
        return MixtureModel.of(
            [({a: as_fraction(p) for a, p in c["iid"].items()}, as_fraction(c["weight"])) for c in doc["mixture"]]
        )
    raise ConfigInvalid(f"unrecognised law document with keys {sorted(doc)}")


def spec_from_json(doc: Mapping) -> SystemSpec:
    try:
        classes = [_class_from_json(c) for c in doc["classes"]]
        if "independent" in doc:
            return SystemSpec.independent(classes, [_law_from_json(l) for l in doc["independent"]])
        comps = doc["components"]
        if all("laws" in c for c in comps):
            laws = []
            for c in comps:
                parsed = [_law_from_json(l) for l in c["laws"]]
                if any(isinstance(p, MixtureModel) for p in parsed):
                    raise ConfigInvalid("mixtures are not allowed inside a latent component")
                laws.append((as_fraction(c["weight"]), parsed))
            return SystemSpec.coupled(classes, laws)
        out = []
        for c in comps:
            fj = c.get("finite_joint")
            finite = None if fj is None else _law_from_json(fj)
            directing = tuple(
                from_probabilities({a: as_fraction(p) for a, p in d.items()}) for d in c.get("directing", [])
            )
            out.append(LatentComponent(as_fraction(c["weight"]), finite, directing))
        return SystemSpec(tuple(classes), tuple(out))
    except ConfigInvalid:
        raise
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as e:
        raise ConfigInvalid(f"invalid system spec: {e}") from e


def spec_to_json(spec: SystemSpec) -> dict:
    if not spec.exact:
        raise ConfigInvalid("sampler-only specs cannot be serialized")
    classes = []
    for c in spec.classes:
        d: dict[str, Any] = {"alphabet": list(c.alphabet)}
        if c.name is not None:
            d["name"] = c.name
        if c.is_infinite:
            d.update(size="inf", truncation=c.truncation)
        else:
            d["size"] = c.size
        classes.append(d)
    comps = []
    for comp in spec.components:
        d = {"weight": frac_str(comp.weight)}
        if comp.finite_law is not None:
            d["finite_joint"] = {
                "tuples": [{"tuple": list(t), "p": frac_str(w)} for t, w in comp.finite_law.items()]
            }
        if comp.directing:
            d["directing"] = [{a: frac_str(w) for (a,), w in q.items()} for q in comp.directing]
        comps.append(d)
    return {"classes": classes, "components": comps}


def _grid_key(key: str):
    if key == LIMIT:
        return LIMIT
    try:
        r = Fraction(key)
    except (ValueError, ZeroDivisionError) as e:
        raise ConfigInvalid(f"bad grid value {key!r}") from e
    return int(r) if r.denominator == 1 else r


def family_from_json(doc: Mapping) -> SystemFamily:
    try:
        members = doc["spec_at"]
    except (KeyError, TypeError) as e:
        raise ConfigInvalid("family document needs a 'spec_at' map") from e
    return SystemFamily({_grid_key(k): spec_from_json(v) for k, v in members.items()})


def family_to_json(fam: SystemFamily) -> dict:
    return {"spec_at": {str(r): spec_to_json(s) for r, s in fam.spec_at.items()}}


def load_json(path: str | Path) -> Any:
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as e:
        raise ConfigInvalid(f"cannot read {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigInvalid(f"{path} is not valid JSON: {e}") from e
