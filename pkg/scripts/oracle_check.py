"""Solver against exhaustive grid search on the binary CEO sources.

    python scripts/oracle_check.py [--step 0.02] [--threads 4]
"""
import argparse

from rdregion import CeoSourceModel, CeoTradeoff, GridSpec, SolverOptions, grid_min_ceo, solve

S_PAIRS = [(0.05, 0.05), (0.5, 0.5), (2.0, 2.0), (0.5, 2.0)]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--step", type=float, default=0.02)
    ap.add_argument("--threads", type=int, default=4)
    ap.add_argument("--restarts", type=int, default=10)
    args = ap.parse_args()

    spec = GridSpec(step=args.step)
    print(f"{'alpha2':>6} {'s1':>5} {'s2':>5} {'reg':>3} {'F_solver':>12} {'F_grid':>12} {'diff':>10}")
    for a2 in (0.25, 0.1):
        m = CeoSourceModel.bern_bsc(0.5, 0.25, a2)
        for s1, s2 in S_PAIRS:
            for region in (1, 2):
                t = CeoTradeoff(s1, s2, region)
                f = solve(m, t, SolverOptions(restarts=args.restarts)).F
                g, _ = grid_min_ceo(m, t, spec, args.threads)
                print(f"{a2:6.2f} {s1:5.2f} {s2:5.2f} {region:3d} {f:12.8f} {g:12.8f} {g - f:10.2e}")


if __name__ == "__main__":
    main()
