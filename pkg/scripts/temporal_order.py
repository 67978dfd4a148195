"""Time-refinement at a fixed mesh: isolates the temporal order from the WENO error.

The density at t=0.05 for CFL numbers 1, 1/2, 1/4, 1/8 is compared with a
run at CFL 1/16 on the same nx=64 mesh.  With non-equilibrium data and
eps much smaller than dt, ARS(2,2,2) drops towards first order while the
GSA type A scheme DP2-A1(2,4,2) stays second order.

    python scripts/temporal_order.py --eps 1e-6
"""
import argparse
import math

import numpy as np

from apkin.phase_space import VelocityGrid, moment_array
from apkin.solver import initial_field, integrate
from apkin.tableau import get_scheme
from apkin.transport import SpaceGrid


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--eps", type=float, default=1e-6)
    ap.add_argument("--init", choices=("eq", "noneq"), default="noneq")
    ap.add_argument("--nx", type=int, default=64)
    ap.add_argument("--schemes", nargs="+", default=["ARS(2,2,2)", "DP2-A1(2,4,2)"])
    args = ap.parse_args()

    vgrid = VelocityGrid(32, 8.0)
    sgrid = SpaceGrid(args.nx)
    f0 = initial_field(args.init, sgrid, vgrid)
    for name in args.schemes:
        tab = get_scheme(name)
        ref = moment_array(integrate(f0, tab, args.eps, 0.05, sgrid, vgrid, cfl=1 / 16), vgrid)[:, 0]
        prev = None
        print(f"{name}  eps={args.eps:g}  init={args.init}")
        for cfl in (1.0, 0.5, 0.25, 0.125):
            rho = moment_array(integrate(f0, tab, args.eps, 0.05, sgrid, vgrid, cfl=cfl), vgrid)[:, 0]
            err = float(np.mean(np.abs(rho - ref)))
            order = "" if prev is None else f"{math.log2(prev / err):.3f}"
            print(f"  cfl={cfl:<6g} error={err:.4e}  order={order}")
            prev = err


if __name__ == "__main__":
    main()
