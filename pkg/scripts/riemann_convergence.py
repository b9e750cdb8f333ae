"""Sup error of the Riemann-sum approximant on a 21x21 grid over K as the mesh halves.

Usage: python3 scripts/riemann_convergence.py [--out results.csv]
"""
import argparse
import csv
import sys
import time

import numpy as np

from caloric.approx import BoxPair, riemann_approximate
from caloric.fields import HeatPolynomial, kernel_pole
from caloric.kernel import SpacetimePoint

BOXES = BoxPair((0, -1), (1, 1), (-0.5, -2), (1.5, 2))
TARGETS = {
    "pole(-2,0)": kernel_pole(SpacetimePoint(-2.0, (0.0,))),
    "x^2+2t": HeatPolynomial([2]),
}


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--meshes", type=float, nargs="+", default=[0.4, 0.2, 0.1, 0.05, 0.025])
    parser.add_argument("--out", help="optional CSV of (target, mesh, terms, sup_error, relative)")
    args = parser.parse_args(argv)
    t, x = BOXES.k_grid(21)
    rows = []
    for name, target in TARGETS.items():
        exact = target.value(t, x)
        scale = float(np.max(np.abs(exact)))
        for h in args.meshes:
            start = time.perf_counter()
            sol = riemann_approximate(target, BOXES, h)
            err = float(np.max(np.abs(sol.value(t, x) - exact)))
            rows.append((name, h, len(sol), err, err / scale))
            print(f"{name:12s} h={h:<6g} terms={len(sol):6d} sup={err:.4e} rel={err / scale:.4e} "
                  f"({time.perf_counter() - start:.2f}s)")
    if args.out:
        with open(args.out, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["target", "mesh", "terms", "sup_error", "relative"])
            w.writerows(rows)
    return 0


if __name__ == "__main__":
    sys.exit(main())
