"""Monte Carlo resampling check on the sampler-only Polya system.

Usage: python3 scripts/shadow_experiment.py [--reps 100000] [--seed 1] [--threads 1]
"""
import argparse
import time

from exchkit.catalog import polya_black_box
from exchkit.multiclass import verify_sufficiency_mc


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--reps", type=int, default=100_000)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--finite-size", type=int, default=3)
    ap.add_argument("--truncation", type=int, default=3)
    args = ap.parse_args()
    t0 = time.perf_counter()
    rep = verify_sufficiency_mc(
        polya_black_box(args.finite_size, args.truncation), args.reps, args.seed, threads=args.threads
    )
    print(f"{'moment':<28}{'original':>10}{'resampled':>11}{'stderr':>10}{'z':>7}")
    for r in rep.rows:
        print(f"{r.name:<28}{r.original:>10.5f}{r.resampled:>11.5f}{r.stderr:>10.2e}{r.z:>7.2f}")
    print(f"measure vector preserved: {rep.measure_vector_preserved}")
    print(f"pass: {rep.passed}  ({time.perf_counter() - t0:.1f}s)")


if __name__ == "__main__":
    main()
