"""Grid-refinement studies of the density for several schemes and regimes.

Each study runs nx in {32, 64, 128, 256} to t=0.05 and prints the observed
orders from successive differences.  BGK studies take about half a minute
each on one core, penalized Boltzmann at nv=16 about a minute and a half.

    python scripts/convergence_study.py --preset bgk-eq
    python scripts/convergence_study.py --scheme "ARS(2,2,2)" --eps 1e-3 --init noneq
"""
import argparse
import time

from apkin.convergence import StudyConfig, run_study
from apkin.tableau import get_scheme

PRESETS = {
    "bgk-eq": [(s, e, "eq", "bgk", 32)
               for e in (1e-1, 1e-6)
               for s in ("ARS(2,2,2)", "DP2-A1(2,4,2)", "ARS(4,4,3)", "BPR-CK(3,5,3)")],
    "bgk-noneq": [(s, 1e-3, "noneq", "bgk", 32) for s in ("ARS(2,2,2)", "DP2-A1(2,4,2)")],
    "boltzmann": [(s, 1e-1, "eq", "boltzmann", 16) for s in ("ARS(2,2,2)", "DP2-A1(2,4,2)")],
}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--preset", choices=sorted(PRESETS))
    ap.add_argument("--scheme")
    ap.add_argument("--eps", type=float, default=1e-1)
    ap.add_argument("--init", choices=("eq", "noneq"), default="eq")
    ap.add_argument("--operator", choices=("bgk", "boltzmann"), default="bgk")
    ap.add_argument("--nv", type=int, default=32)
    ap.add_argument("--nx", type=int, nargs="+", default=[32, 64, 128, 256])
    ap.add_argument("--tfinal", type=float, default=0.05)
    ap.add_argument("--reference", choices=("successive", "finest", "rk4"), default="successive")
    args = ap.parse_args()
    if args.preset:
        jobs = PRESETS[args.preset]
    elif args.scheme:
        jobs = [(args.scheme, args.eps, args.init, args.operator, args.nv)]
    else:
        ap.error("give --preset or --scheme")

    for name, eps, init, op, nv in jobs:
        cfg = StudyConfig(get_scheme(name), eps, nx_list=tuple(args.nx), nv=nv, t_final=args.tfinal,
                          operator=op, init=init, reference=args.reference)
        t0 = time.perf_counter()
        rows = run_study(cfg)
        print(f"{name}  eps={eps:g}  init={init}  operator={op}  nv={nv}  "
              f"({time.perf_counter() - t0:.0f} s)")
        for r in rows:
            order = "" if r.order is None else f"{r.order:.3f}"
            print(f"  nx={r.nx:<4d} error={r.error:.4e}  order={order}")


if __name__ == "__main__":
    main()
