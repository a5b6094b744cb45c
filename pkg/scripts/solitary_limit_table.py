"""Index signs along the a = 0 dnoidal family as the energy approaches the separatrix.

Prints one row per (p, c): predicted verdict, dP/dc, agreement fraction,
period slope against -ln(distance) and any guarded points.
"""
import argparse

from wavelab.asymptotics import critical_speed, solitary_limit_consistency


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--powers", type=float, nargs="+", default=[1.0, 2.0, 3.0, 5.0])
    ap.add_argument("--speeds", type=float, nargs="+", default=[1.05, 1.5, 2.0])
    ap.add_argument("--E", type=float, nargs="+", default=[-1e-2, -3e-3, -1e-3, -3e-4, -1e-4])
    args = ap.parse_args()

    print(f"{'p':>4} {'c':>5} {'c0(p)':>8} {'verdict':>9} {'dP/dc':>11} {'agree':>6} "
          f"{'slope':>7} {'expect':>7}  guarded")
    for p in args.powers:
        c0 = critical_speed(p) if p > 4 else float("nan")
        for c in args.speeds:
            rep = solitary_limit_consistency(p, c, E_seq=args.E)
            print(f"{p:4g} {c:5g} {c0:8.5f} {rep.predicted:>9} {rep.dpdc:11.4e} {rep.agreement:6.2f} "
                  f"{rep.slope_fit:7.4f} {rep.slope_expected:7.4f}  {len(rep.errors)}")


if __name__ == "__main__":
    main()
