"""Discriminant normalization check and the mass-derivative ratio near the separatrix.

Compares the Sylvester-determinant discriminant with the closed form
-E (4E + (c-1)^2)^2 / 4 and tabulates disc(R) M_a / ((c-1) T) as E -> 0+.
"""
import argparse

import numpy as np

from wavelab.asymptotics import (
    DISC_NORMALIZATION,
    mass_a_limit,
    pf_matrix,
    radicand_discriminant,
    radicand_discriminant_closed,
)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--speeds", type=float, nargs="+", default=[1.5, 2.0, 3.0])
    ap.add_argument("--E", type=float, nargs="+", default=[1e-2, 3e-3, 1e-3, 3e-4, 1e-4])
    args = ap.parse_args()

    print(f"normalization constant {DISC_NORMALIZATION:g}")
    for c in args.speeds:
        for E in (1e-3, 1e-2, 0.1):
            d, ref = radicand_discriminant(E, c), radicand_discriminant_closed(E, c)
            print(f"c={c:g} E={E:g}: disc {d:.12e} closed {ref:.12e} cond(PF) {np.linalg.cond(pf_matrix(E, c)):.2e}")
    for c in args.speeds:
        lim = mass_a_limit(c, tuple(args.E))
        ratios = ", ".join(f"{r:.4e}" for r in lim["ratio"])
        print(f"c={c:g}: ratios [{ratios}] -> fitted limit {lim['limit']:.3e}")


if __name__ == "__main__":
    main()
