"""Eigenvalues of the two-edge graph against -(m pi / L)^2.

    python scripts/eigenvalues.py --lengths 1,1 --re0 -70
"""
import argparse

import numpy as np

from singstar.graph import star
from singstar.weyl import locate_eigenvalues


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--lengths", default="1,1")
    ap.add_argument("--re0", type=float, default=-70.0)
    ap.add_argument("--re1", type=float, default=-0.5)
    args = ap.parse_args()

    lengths = [float(v) for v in args.lengths.split(",")]
    L = sum(lengths)
    res = locate_eigenvalues(star([2, 2], lengths), 1, 1, (args.re0, args.re1, -1.0, 1.0))
    print(f"# winding {res.winding}, returned {sum(res.multiplicities)}")
    print("m,computed,closed_form,abs_error")
    for m, z in enumerate(sorted(res.eigenvalues, key=lambda z: -z.real), start=1):
        ref = -(m * np.pi / L) ** 2
        print(f"{m},{z.real!r},{ref!r},{abs(z - ref)!r}")


if __name__ == "__main__":
    main()
