"""Transonic expansion check over a range of eps for each bundled nonlinearity."""

import argparse

import numpy as np

from gnls.kdv import verify_expansions
from gnls.nonlinearity import preset


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("names", nargs="*", default=["gp", "fig2", "fig3", "fig4"])
    ap.add_argument("--eps", default="0.025,0.05,0.1,0.15,0.2,0.25")
    args = ap.parse_args()
    eps = [float(e) for e in args.eps.split(",")]
    for name in args.names:
        rep = verify_expansions(preset(name), eps)
        C = np.array(rep.E_residual) / np.array(eps) ** 7
        print(
            f"{name:5s} slope={rep.energy_slope:.4f} max|dp|={max(map(abs, rep.p_residual)):.2e} "
            f"E_res/eps^7 in [{C.min():.4g}, {C.max():.4g}] K1={rep.K1:.6g}"
        )


if __name__ == "__main__":
    main()
