"""Tabulate the brute-force quadrature collision integral for the two-Maxwellian test.

The result is stored next to the tests and compared against the spectral
operator there.  Expect a few minutes at nv=16.

    python scripts/precompute_collision_oracle.py [--out tests/data/collision_oracle_nv16.npz]
"""
import argparse
import time
from pathlib import Path

import numpy as np

from apkin.collision import DEFAULT_SIGMA, default_radius
from apkin.oracle import projected_oracle
from apkin.phase_space import VelocityGrid

NV = 16
VMAX = 8.0
PARAMS = [(0.5, 1.0, 0.0, 1.0), (0.5, -1.0, 0.5, 1.0)]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default=str(Path(__file__).resolve().parents[1] / "tests" / "data"
                                         / "collision_oracle_nv16.npz"))
    ap.add_argument("--nodes", type=int, default=48, help="quadrature nodes per direction")
    args = ap.parse_args()

    grid = VelocityGrid(NV, VMAX)
    radius = default_radius(VMAX)
    t0 = time.perf_counter()
    q = projected_oracle(grid, PARAMS, DEFAULT_SIGMA, radius,
                         n_r=args.nodes, n_theta=args.nodes, n_omega=args.nodes)
    elapsed = time.perf_counter() - t0
    np.savez(args.out, q=q, params=np.array(PARAMS), nv=NV, vmax=VMAX,
             sigma=DEFAULT_SIGMA, radius=radius, nodes=args.nodes)
    print(f"wrote {args.out} in {elapsed:.1f} s")


if __name__ == "__main__":
    main()
