"""Gap tables for the mixture family converging to equal directing weights.

Usage: python3 scripts/convergence_experiment.py [--max-r 64] [--degree 3] [--tol 0.01]
"""
import argparse

from exchkit.catalog import mixture_family
from exchkit.convergence import convergence_report


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--max-r", type=int, default=64)
    ap.add_argument("--k", type=int, default=2)
    ap.add_argument("--degree", type=int, default=3)
    ap.add_argument("--tol", type=float, default=1e-2)
    args = ap.parse_args()
    grid = [2**i for i in range(args.max_r.bit_length()) if 2**i <= args.max_r]
    rep = convergence_report(mixture_family(grid), k=args.k, degree=args.degree, tolerance=args.tol)
    print(f"{'r':>5}{'fdd_gap':>12}{'fdd_bound':>12}{'vector_gap':>12}")
    for r in grid:
        print(f"{r:>5}{str(rep.fdd_gap[r]):>12}{str(rep.fdd_bound[r]):>12}{str(rep.vector_gap[r]):>12}")
    print("transfer constants:", {k: str(v) if not isinstance(v, list) else v for k, v in rep.transfer_constants.items()})
    print("rates:", rep.rates)
    print("verdict:", rep.verdict)


if __name__ == "__main__":
    main()
