"""Write the example spec, family and run-config JSON files into configs/."""
import json
from pathlib import Path

from exchkit.catalog import coupled_binary_system, mixed_member, mixture_family
from exchkit.serialize import family_to_json, spec_to_json
from fractions import Fraction

OUT = Path(__file__).resolve().parent.parent / "configs"


def dump(name, doc):
    path = OUT / name
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    print("wrote", path)


def main():
    OUT.mkdir(exist_ok=True)
    dump("coupled_system.json", spec_to_json(coupled_binary_system()))
    dump("mixed_system.json", spec_to_json(mixed_member(Fraction(1, 3), truncation=3)))
    dump("family.json", family_to_json(mixture_family()))
    dump("run_tv_bound.json", {"command": "tv-bound", "N": 10, "k": 3})
    dump("run_resample.json", {"command": "resample-test", "spec": "mixed_system.json", "reps": 20000, "seed": 2024})
    dump("run_convergence.json", {"command": "convergence", "family": "family.json", "k": 2, "degree": 3, "tol": 0.01})


if __name__ == "__main__":
    main()
