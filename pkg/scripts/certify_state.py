#!/usr/bin/env python3
"""
Certify an arbitrary Morley state (not necessarily a Newton root).

The mesh uses the plain-text format written by save_mesh ('v x y' and
't i j k r' lines); the state file holds one Morley coefficient per line.

Usage:
    python3 scripts/certify_state.py --mesh level_03_mesh.txt --state level_03_state.txt --benchmark square-poly
    python3 scripts/certify_state.py --mesh m.txt --state s.txt --benchmark square-poly --lambda 100 --out cert.txt
"""

import argparse
import sys
from pathlib import Path

import numpy as np

from stream_verify.benchmarks import BENCHMARKS, grisvard_source, square_poly_source
from stream_verify.certify import certify
from stream_verify.config import TOL_EIG, TOL_EIG_J
from stream_verify.errors import StreamVerifyError
from stream_verify.mesh import load_mesh
from stream_verify.morley import MorleySpace


def main():
    parser = argparse.ArgumentParser(description="Existence certificate for a given Morley function")
    parser.add_argument("--mesh", required=True, help="Mesh file")
    parser.add_argument("--state", required=True, help="Coefficient file, one value per line")
    parser.add_argument("--benchmark", choices=BENCHMARKS, default='square-poly', help="Source term")
    parser.add_argument("--lambda", dest="lam", type=float, default=1.0, help="Scaling of square-poly")
    parser.add_argument("--tol-eig", type=float, default=TOL_EIG)
    parser.add_argument("--tol-eig-J", dest="tol_eig_J", type=float, default=TOL_EIG_J)
    parser.add_argument("--out", help="Write the certificate here instead of printing it")
    args = parser.parse_args()

    try:
        mesh = load_mesh(args.mesh)
        coef = np.loadtxt(args.state, ndmin=1)
        space = MorleySpace(mesh)
        v = space.function(coef)
        source = square_poly_source(args.lam) if args.benchmark == 'square-poly' else grisvard_source()
        cert = certify(v, source, tol_eig=args.tol_eig, tol_eig_J=args.tol_eig_J,
                       metadata={'mesh_file': args.mesh, 'state_file': args.state})
    except (ValueError, StreamVerifyError) as e:
        print(f"❌ {type(e).__name__}: {e}")
        sys.exit(1)

    text = cert.to_text()
    if args.out:
        Path(args.out).write_text(text)
        print(f"📝 Certificate saved to: {args.out}")
    else:
        print(text)
    print("✓ verified" if cert.verified else f"⚠️  not verified: {cert.reason}")


if __name__ == "__main__":
    main()
