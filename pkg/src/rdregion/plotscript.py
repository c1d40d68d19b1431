"""Generates a standalone matplotlib script that plots the emitted CSV files."""
from __future__ import annotations

_TEMPLATE = '''\
"""Plots the region data written next to this file. Requires matplotlib."""
import csv
from pathlib import Path

import matplotlib.pyplot as plt

HERE = Path(__file__).resolve().parent
PROBLEM = {problem!r}
HAS_EQUAL_RATE = {has_equal_rate!r}


def read(name):
    with open(HERE / name, newline="") as fh:
        return list(csv.DictReader(fh))


def region_clouds(rows):
    """R1-R2-distortion scatter, one colour per region index."""
    fig = plt.figure(figsize=(6, 5))
    ax = fig.add_subplot(projection="3d")
    for region, colour in (("1", "tab:blue"), ("2", "tab:red")):
        sel = [r for r in rows if r["region"] == region and r["converged"] == "true"]
        if PROBLEM == "ceo":
            z = [float(r["D1"]) for r in sel]
        else:
            z = [float(r["alpha"]) * float(r["D1"]) + (1 - float(r["alpha"])) * float(r["D2"]) for r in sel]
        ax.scatter([float(r["R1"]) for r in sel], [float(r["R2"]) for r in sel], z,
                   s=8, c=colour, label=f"region {{region}}")
    ax.set_xlabel("R1 [bits]")
    ax.set_ylabel("R2 [bits]")
    ax.set_zlabel("D [bits]" if PROBLEM == "ceo" else "weighted D [bits]")
    ax.legend()
    fig.tight_layout()
    fig.savefig(HERE / "region_points.png", dpi=150)


def equal_rate_curve(rows):
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.plot([float(r["R"]) for r in rows], [float(r["D"]) for r in rows])
    ax.set_xlabel("R1 = R2 = R [bits]")
    ax.set_ylabel("D [bits]")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(HERE / "equal_rate.png", dpi=150)


if __name__ == "__main__":
    region_clouds(read("points.csv"))
    if HAS_EQUAL_RATE:
        equal_rate_curve(read("equal_rate.csv"))
'''


def render_plot_script(problem: str, has_equal_rate: bool) -> str:
    return _TEMPLATE.format(problem=problem, has_equal_rate=has_equal_rate)
