"""Stability and asymptotic properties of every registry scheme, as one CSV table.

    python scripts/table1.py [--out table1.csv]
"""
import argparse
import sys

from apkin.stability import table1_report, to_csv
from apkin.tableau import registry


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default=None, help="CSV path (default: stdout)")
    ap.add_argument("--alpha-max", type=float, default=16.0)
    args = ap.parse_args()
    text = to_csv(table1_report(registry(), alpha_max=args.alpha_max))
    if args.out:
        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


if __name__ == "__main__":
    main()
