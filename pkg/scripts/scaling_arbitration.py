"""Profile mismatch of the two parameter conventions of the power-law scaling map."""
import argparse

from wavelab.asymptotics import PowerLaw, arbitrate_scaling


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--powers", type=float, nargs="+", default=[1.0, 2.0, 3.0])
    ap.add_argument("--speeds", type=float, nargs="+", default=[1.5, 2.0, 3.0, 5.0])
    ap.add_argument("--E-v", type=float, default=-0.01, dest="E_v")
    args = ap.parse_args()
    print(f"{'p':>4} {'c':>5} {'shifted':>11} {'printed':>11}  selected")
    for p in args.powers:
        hint = PowerLaw(p).well_minimum(2.0)
        for c in args.speeds:
            out = arbitrate_scaling(0.0, args.E_v, c, p, v_hint=hint)
            print(f"{p:4g} {c:5g} {out['shifted']:11.3e} {out['printed']:11.3e}  {out['selected']}")


if __name__ == "__main__":
    main()
