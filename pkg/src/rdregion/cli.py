"""Command-line front end: ``rdregion --config run.toml``.

Exit codes: 0 success (non-converged solves are flagged in the output, not
fatal), 2 configuration error, 3 I/O error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import bt, ceo
from .config import FORMATS, ConfigError, RunConfig, load_config
from .oracle import GridSpec, grid_min_bt, grid_min_ceo
from .region import RegionHull, equal_rate_slice, sweep_bt, sweep_ceo
from .plotscript import render_plot_script

log = logging.getLogger("rdregion")

EXIT_OK, EXIT_CONFIG, EXIT_IO = 0, 2, 3
THREADS_ENV = "RDREGION_THREADS"
POINTS_HEADER = ["problem", "region", "s1", "s2", "alpha", "R1", "R2", "D1", "D2", "F", "iters", "converged"]
ORACLE_HEADER = ["problem", "region", "s1", "s2", "alpha", "F_solver", "F_oracle", "diff", "step"]


def fmt_num(v) -> str:
    """12 significant digits, '.' decimal; empty for missing values."""
    if v is None:
        return ""
    return f"{float(v):.12g}"


def points_rows(hull: RegionHull) -> list[list[str]]:
    rows = []
    for p in hull.points:
        rows.append([
            p.problem, str(p.region), fmt_num(p.s1), fmt_num(p.s2), fmt_num(p.alpha),
            fmt_num(p.R1), fmt_num(p.R2), fmt_num(p.D1), fmt_num(p.D2), fmt_num(p.F),
            str(p.iterations), "true" if p.converged else "false",
        ])
    return rows


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def hull_document(cfg: RunConfig, hull: RegionHull) -> dict:
    return {
        "problem": hull.problem,
        "source": cfg.source_spec,
        "seed": cfg.seed,
        "halfspaces": [
            {"s1": h.s1, "s2": h.s2, "alpha": h.alpha, "offset": h.offset, "region": h.region}
            for h in hull.halfspaces
        ],
        "hull_facets": [
            {
                "alpha": alpha,
                "facets": [
                    {"vertices": list(f.vertices), "normal": list(f.normal), "offset": f.offset}
                    for f in facets
                ],
            }
            for alpha, facets in hull.hull_facets.items()
        ],
        "points": [
            {
                "region": p.region, "s1": p.s1, "s2": p.s2, "alpha": p.alpha,
                "R1": p.R1, "R2": p.R2, "D1": p.D1, "D2": p.D2, "F": p.F,
                "iters": p.iterations, "converged": p.converged,
            }
            for p in hull.points
        ],
    }


def run_oracle(cfg: RunConfig, hull: RegionHull) -> list[list[str]]:
    """Side-by-side solver and grid-search objective values at the configured weights."""
    spec = GridSpec(step=cfg.oracle.step)
    rows = []
    opts = cfg.grid.options_for(0)
    for s1, s2 in cfg.oracle.s_pairs:
        for region in (1, 2):
            if cfg.problem == "ceo":
                t = ceo.CeoTradeoff(s1, s2, region)
                f_solver = ceo.solve(cfg.source, t, opts).F
                f_oracle, _ = grid_min_ceo(cfg.source, t, spec, cfg.threads)
                alpha = None
            else:
                t = bt.BtTradeoff(s1, s2, cfg.oracle.alpha, region)
                f_solver = bt.solve_bt(cfg.source, t, opts).F
                f_oracle, _ = grid_min_bt(cfg.source, t, spec, cfg.threads)
                alpha = cfg.oracle.alpha
            rows.append([
                cfg.problem, str(region), fmt_num(s1), fmt_num(s2), fmt_num(alpha),
                fmt_num(f_solver), fmt_num(f_oracle), fmt_num(f_solver - f_oracle), fmt_num(cfg.oracle.step),
            ])
    return rows


def build_outputs(cfg: RunConfig) -> dict[str, str]:
    """Compute everything and return {file name: text}; nothing is written here."""
    if cfg.problem == "ceo":
        hull = sweep_ceo(cfg.source, cfg.grid)
    else:
        hull = sweep_bt(cfg.source, cfg.grid)
    n_bad = sum(not p.converged for p in hull.points)
    if n_bad:
        log.warning("%d of %d solves did not converge; rows are flagged", n_bad, len(hull.points))
    files: dict[str, str] = {}
    want_csv = cfg.fmt in ("csv", "both")
    want_json = cfg.fmt in ("json", "both")
    if want_csv:
        files["points.csv"] = _csv_text(POINTS_HEADER, points_rows(hull))
    if want_json:
        files["hull.json"] = json.dumps(hull_document(cfg, hull), indent=1) + "\n"
    if cfg.equal_rate:
        r_max = cfg.r_max
        if r_max is None:
            r_max = max([2.5] + [max(p.R1, p.R2) for p in hull.converged_points])
        curve = equal_rate_slice(hull, np.linspace(0.0, r_max, cfg.r_count))
        if want_csv:
            files["equal_rate.csv"] = _csv_text(["R", "D"], [[fmt_num(r), fmt_num(d)] for r, d in curve])
        if want_json:
            files["equal_rate.json"] = json.dumps([{"R": r, "D": d} for r, d in curve]) + "\n"
    if cfg.oracle.enabled:
        files["oracle.csv"] = _csv_text(ORACLE_HEADER, run_oracle(cfg, hull))
    if cfg.plot_script and "points.csv" in files:
        files["plot_region.py"] = render_plot_script(cfg.problem, "equal_rate.csv" in files)
    return files


def write_outputs(out_dir: Path, files: dict[str, str]) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    for name in sorted(files):
        (out_dir / name).write_text(files[name], encoding="utf-8")


def _threads(arg: int | None) -> int | None:
    if arg is not None:
        return arg
    env = os.environ.get(THREADS_ENV)
    if env is None:
        return None
    try:
        n = int(env)
    except ValueError:
        raise ConfigError(THREADS_ENV, f"expected an integer, got {env!r}") from None
    if n < 1:
        raise ConfigError(THREADS_ENV, "must be >= 1")
    return n


def apply_overrides(cfg: RunConfig, args: argparse.Namespace) -> RunConfig:
    threads = _threads(args.threads)
    if threads is not None and threads < 1:
        raise ConfigError("--threads", "must be >= 1")
    seed = args.seed if args.seed is not None else cfg.seed
    threads = threads if threads is not None else cfg.threads
    return replace(
        cfg,
        seed=seed,
        threads=threads,
        grid=replace(cfg.grid, seed=seed, threads=threads),
        out_dir=Path(args.out_dir) if args.out_dir else cfg.out_dir,
        fmt=args.format or cfg.fmt,
        oracle=replace(cfg.oracle, enabled=True) if args.oracle else cfg.oracle,
    )


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="rdregion",
        description="Rate-distortion regions of the two-encoder CEO and Berger-Tung problems under log-loss.",
    )
    p.add_argument("--config", required=True, help="TOML run configuration")
    p.add_argument("--out-dir", help="output directory (overrides output.dir)")
    p.add_argument("--oracle", action="store_true", help="also run the brute-force grid oracle")
    p.add_argument("--seed", type=int, help="random seed (overrides the config)")
    p.add_argument("--threads", type=int, help=f"worker threads (fallback: ${THREADS_ENV})")
    p.add_argument("--format", choices=FORMATS, help="which data files to emit")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv: list[str] | None = None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = apply_overrides(load_config(args.config), args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        files = build_outputs(cfg)
    except ValueError as exc:
        # model-level validation that only surfaces once the solvers run
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        write_outputs(cfg.out_dir, files)
    except OSError as exc:
        print(f"cannot write outputs: {exc}", file=sys.stderr)
        return EXIT_IO
    log.info("wrote %s to %s", ", ".join(sorted(files)), cfg.out_dir)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
