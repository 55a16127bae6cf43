"""Write the click-law and variance tables and print a coarse text rendering."""
import argparse
from pathlib import Path

import numpy as np

from pevclock.analytics import FIG1_P, ell_max, figure_data, mean_ell, var_ell


def bar(x, scale, width=50):
    return "#" * int(round(width * x / scale))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out/figures")
    ap.add_argument("--ell-range", type=int, default=40)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    fig1 = figure_data("fig1", ell_range=args.ell_range)
    fig2 = figure_data("fig2")
    fig1.write_csv(out / "fig1.csv")
    fig2.write_csv(out / "fig2.csv")

    for p in FIG1_P:
        col = fig1.column(f"prob_p{p:g}")
        print(f"p = {p}: l_max = {ell_max(p):.2f}, mean = {mean_ell(p):.3f}, sd = {np.sqrt(var_ell(p)):.3f}")
        for ell in range(1, min(16, len(col)) + 1):
            print(f"  {ell:3d} {col[ell - 1]:.4f} {bar(col[ell - 1], col.max())}")
    print("variance of l against p:")
    for p, v in zip(fig2.column("p")[4::10], fig2.column("var")[4::10]):
        print(f"  p={p:.2f} var={v:9.3f}")
    print(f"wrote {out / 'fig1.csv'} and {out / 'fig2.csv'}")


if __name__ == "__main__":
    main()
