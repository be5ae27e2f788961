"""Deviation of psi from its large-|rho| reference along a ray.

    python scripts/asymptotics_table.py --arg 0.785398 --radii 10,20,40,80,160
"""
import argparse

import numpy as np

from singstar.graph import star
from singstar.weyl import asymptotic_deviation


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--arg", type=float, default=np.pi / 4)
    ap.add_argument("--radii", default="10,20,40,80,160")
    ap.add_argument("--x", type=float, default=0.1)
    ap.add_argument("--c", type=float, default=1.0, help="constant potential on edge 1")
    args = ap.parse_args()

    g = star([2, 2], q=[((args.c,),), ()])
    radii = [float(r) for r in args.radii.split(",")]
    print("abs_rho,nu,deviation,deviation_times_abs_rho")
    for nu in (0, 1):
        for r in radii:
            d = asymptotic_deviation(g, 1, 1, nu, args.x, r * np.exp(1j * args.arg))
            print(f"{r!r},{nu},{d!r},{d * r!r}")


if __name__ == "__main__":
    main()
