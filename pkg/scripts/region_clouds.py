"""Both region clouds of the asymmetric binary CEO source, with a dominance summary.

For the same kernels the two orders differ by (s1 - s2) I(U1;U2), so at
each (s1, s2) the order that decodes the higher-priced encoder last gives
the smaller supporting value. The summary counts those wins.

    python scripts/region_clouds.py [--config configs/ceo_asymmetric.toml]
"""
import argparse
from collections import Counter

from rdregion.config import load_config
from rdregion.region import sweep_ceo


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default="configs/ceo_asymmetric.toml")
    args = ap.parse_args()

    cfg = load_config(args.config)
    hull = sweep_ceo(cfg.source, cfg.grid)
    offsets = {}
    for p in hull.converged_points:
        offsets.setdefault((p.s1, p.s2), {})[p.region] = p.offset
    wins = Counter()
    for (s1, s2), off in sorted(offsets.items()):
        if len(off) == 2 and abs(off[1] - off[2]) > 1e-6:
            side = "s1>s2" if s1 > s2 else "s1<s2"
            wins[(side, 1 if off[1] < off[2] else 2)] += 1
    for (side, region), n in sorted(wins.items()):
        print(f"{side}: region {region} strictly smaller in {n} weight pairs")
    print(f"{len(hull.points)} solves, {len(hull.violations())} halfspace violations")


if __name__ == "__main__":
    main()
