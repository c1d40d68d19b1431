"""Equal-rate distortion curves of the symmetric binary CEO source at several noise levels.

Writes out/noise_levels.csv with one column per crossover probability and,
if matplotlib is importable, out/noise_levels.png.

    python scripts/noise_levels.py [--alphas 0.01 0.1 0.25] [--out out]
"""
import argparse
import csv
from pathlib import Path

import numpy as np

from rdregion import CeoSourceModel, SweepGrid, equal_rate_slice, sweep_ceo
from rdregion.prob import conditional_entropy


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--alphas", type=float, nargs="+", default=[0.01, 0.1, 0.25])
    ap.add_argument("--out", default="out")
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()

    r = np.linspace(0.0, 2.5, 51)
    curves = {}
    for a in args.alphas:
        m = CeoSourceModel.bern_bsc(0.5, a, a)
        hull = sweep_ceo(m, SweepGrid(threads=args.threads))
        curves[a] = [d for _, d in equal_rate_slice(hull, r)]
        floor = conditional_entropy(m.joint(), ["X"], ["Y1", "Y2"])
        print(f"alpha={a:<5} D(0)={curves[a][0]:.9f}  D(2.5)={curves[a][-1]:.6f}  floor={floor:.6f}")

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "noise_levels.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["R"] + [f"D_alpha_{a:g}" for a in args.alphas])
        for i, rv in enumerate(r):
            w.writerow([f"{rv:.12g}"] + [f"{curves[a][i]:.12g}" for a in args.alphas])

    try:
        import matplotlib.pyplot as plt
    except ImportError:
        return
    fig, ax = plt.subplots(figsize=(5, 4))
    for a in args.alphas:
        ax.plot(r, curves[a], label=f"alpha = {a:g}")
    ax.set_xlabel("R1 = R2 = R [bits]")
    ax.set_ylabel("D [bits]")
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(out / "noise_levels.png", dpi=150)


if __name__ == "__main__":
    main()
