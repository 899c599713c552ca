#!/usr/bin/env python3
"""
Run a benchmark refinement history and certify every level.

Writes history.csv / history.dat, one certificate per level and a rate
report under the output directory, plus a run log under logs/.

Usage:
    python3 scripts/run_benchmark.py --benchmark square-poly --lambda 1 --refine uniform
    python3 scripts/run_benchmark.py --benchmark square-poly --lambda 100 --refine adaptive-hmax --max-ndof 50000
    python3 scripts/run_benchmark.py --benchmark lshape-grisvard --refine adaptive
    python3 scripts/run_benchmark.py --benchmark square-poly --max-ndof 40 --export-matrices  # small oracle files
"""

import argparse
import sys

from stream_verify.benchmarks import BENCHMARKS, BenchmarkConfig
from stream_verify.cli import run
from stream_verify.config import MAX_NDOF, OUTPUT_DIR, THETA, TOL_EIG, TOL_EIG_J
from stream_verify.solve import RefinementStrategy


def main():
    parser = argparse.ArgumentParser(description="Certified refinement history for a stream-function benchmark")
    parser.add_argument("--benchmark", choices=BENCHMARKS, default='square-poly', help="Benchmark problem")
    parser.add_argument("--lambda", dest="lam", type=float, default=1.0, help="Scaling of square-poly (1, 10, 100)")
    parser.add_argument("--refine", choices=[s.value for s in RefinementStrategy], default='uniform',
                        help="Refinement strategy")
    parser.add_argument("--theta", type=float, default=THETA, help="Doerfler bulk parameter")
    parser.add_argument("--max-ndof", type=lambda s: int(float(s)), default=MAX_NDOF,
                        help="Stop before the first mesh above this many dofs")
    parser.add_argument("--tol-eig", type=float, default=TOL_EIG, help="Eigensolver tolerance")
    parser.add_argument("--tol-eig-J", dest="tol_eig_J", type=float, default=TOL_EIG_J,
                        help="Eigensolver tolerance for ||J||")
    parser.add_argument("--out", default=str(OUTPUT_DIR), help="Output directory")
    parser.add_argument("--export-matrices", action="store_true",
                        help="Write A_nc, A_J, B_J, D and B_gamma of small levels in coordinate format")
    parser.add_argument("--quiet", action="store_true", help="Only write files, no console progress")
    args = parser.parse_args()

    try:
        config = BenchmarkConfig(args.benchmark, args.lam, args.refine, args.theta, args.max_ndof, args.tol_eig,
                                 args.tol_eig_J, args.out, args.export_matrices, not args.quiet)
    except ValueError as e:
        print(f"❌ {e}")
        sys.exit(1)

    sys.exit(run(config))


if __name__ == "__main__":
    main()
