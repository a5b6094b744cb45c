"""Branch and scan point clouds near the origin for a dnoidal and a cnoidal mBBM wave.

Writes <out>/<name>_branch_<j>.csv and <out>/<name>_scan.csv with columns
kappa, re_mu, im_mu, residual (plotting is left to external tools).
"""
import argparse
import csv
from pathlib import Path

from wavelab import WaveParams, mbbm
from wavelab.spectrum import CSV_COLUMNS, projective_cubic, scan, track_branches

WAVES = {
    "dnoidal": (WaveParams(0.0, -0.05, 2.0, 1.0), (-0.02, 0.02, -0.2, 0.2)),
    "cnoidal": (WaveParams(0.0, 0.02, 2.0, 0.0), (-0.02, 0.02, -0.05, 0.05)),
}


def write(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(CSV_COLUMNS)
        w.writerows([[format(v, ".17g") for v in r] for r in rows])


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out/spectrum_data")
    ap.add_argument("--kappa-max", type=float, default=1e-2)
    ap.add_argument("--grid", type=int, nargs=2, default=[9, 21])
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    nl = mbbm()
    for name, (params, region) in WAVES.items():
        cub = projective_cubic(params, nl)
        for j, b in enumerate(track_branches(params, nl, args.kappa_max, 9, cubic=cub)):
            write(out / f"{name}_branch_{j}.csv", b.rows())
        pts = scan(params, nl, region, tuple(args.grid))
        write(out / f"{name}_scan.csv", [p.row() for p in pts])
        print(f"{name}: roots {cub.roots}, {len(pts)} scan points")


if __name__ == "__main__":
    main()
