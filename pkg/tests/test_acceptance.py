"""Acceptance gate. Run with ``pytest tests/test_acceptance.py -s`` to see the summary lines."""
from pathlib import Path

import numpy as np
import pytest

from conftest import random_bt, random_ceo, random_kernels
from rdregion import bt, ceo, cli
from rdregion.bt import BtAuxiliaries, BtSourceModel
from rdregion.ceo import CeoAuxiliaries, CeoSourceModel, CeoTradeoff
from rdregion.common import SolverOptions
from rdregion.oracle import GridSpec, grid_min_ceo
from rdregion.region import SweepGrid, equal_rate_slice, sweep_bt, sweep_ceo
from test_bt import kl_gap as bt_kl_gap
from test_bt import random_aux as bt_random_aux
from test_ceo import kl_gap as ceo_kl_gap
from test_ceo import random_aux as ceo_random_aux

R_GRID = np.linspace(0.0, 2.5, 51)
ORACLE_S = [(0.05, 0.05), (0.5, 0.5), (2.0, 2.0), (0.5, 2.0)]


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {n}: {detail}")
        assert ok, detail

    return emit


@pytest.fixture(scope="module")
def noise_hulls():
    return {a: sweep_ceo(CeoSourceModel.bern_bsc(0.5, a, a)) for a in (0.01, 0.1, 0.25)}


@pytest.fixture(scope="module")
def bt_hull():
    grid = SweepGrid(s_values=(0.02, 0.1, 0.5, 2.0), product=True, alpha_values=(0.0, 0.25, 0.5, 1.0))
    return sweep_bt(BtSourceModel.dsbs(0.1), grid)


@pytest.fixture(scope="module")
def asym_hull():
    grid = SweepGrid(s_values=(0.02, 0.1, 0.3, 1.0, 3.0), product=True)
    return sweep_ceo(CeoSourceModel.bern_bsc(0.5, 0.25, 0.1), grid)


def test_criterion_1_descent(report):
    rng = np.random.default_rng(2024)
    worst = -np.inf
    for i in range(200):
        s = tuple(rng.uniform(0.01, 10, 2))
        opts = SolverOptions(restarts=1, rng_seed=i)
        m = random_ceo(rng)
        worst = max(worst, np.max(np.diff(ceo.solve(m, s, opts).objective)))
        # the half steps of one sweep, through the public operations
        k = random_kernels(rng)
        q = ceo.update_q(m, k)
        for _ in range(5):
            f0 = ceo.f_s_pq(m, k, q, s)
            k = ceo.update_p(m, k, q, s)
            f1 = ceo.f_s_pq(m, k, q, s)
            q = ceo.update_q(m, k)
            f2 = ceo.f_s_pq(m, k, q, s)
            worst = max(worst, f1 - f0, f2 - f1)

        beta = (*s, (0.0, 0.5, 1.0)[i % 3])
        mb = random_bt(rng)
        worst = max(worst, np.max(np.diff(bt.solve_bt(mb, beta, opts).objective)))
        k = random_kernels(rng)
        q = bt.update_q_bt(mb, k)
        for _ in range(5):
            f0 = bt.f_beta_pq(mb, k, q, beta)
            k = bt.update_p_bt(mb, k, q, beta)
            f1 = bt.f_beta_pq(mb, k, q, beta)
            q = bt.update_q_bt(mb, k)
            f2 = bt.f_beta_pq(mb, k, q, beta)
            worst = max(worst, f1 - f0, f2 - f1)
    report(1, worst <= 1e-10, f"largest objective increase {worst:.3g} over 200 CEO + 200 BT instances (limit 1e-10)")


def _toward(q_star, q_rand, eps, cls):
    """Mixture (1 - eps) Q* + eps Q_random, so some pairs sit right next to the optimum."""
    return cls.from_arrays(*((1 - eps) * a + eps * b for a, b in zip(q_star.arrays(), q_rand.arrays())))


def test_criterion_2_gap_identity(report):
    rng = np.random.default_rng(7)
    err, low = 0.0, np.inf
    for i in range(100):
        eps = (0.0, 1e-6, 1e-3, 1.0)[i % 4]
        s1, s2 = rng.uniform(0.01, 10, 2)
        m, k = random_ceo(rng), random_kernels(rng)
        q_star = ceo.update_q(m, k)
        q = _toward(q_star, ceo_random_aux(rng, 2, 2, 2), eps, CeoAuxiliaries)
        gap = ceo.f_s_pq(m, k, q, (s1, s2)) - ceo.f_s_pq(m, k, q_star, (s1, s2))
        err, low = max(err, abs(gap - ceo_kl_gap(m, k, q, s1, s2))), min(low, gap)

        a = float(rng.choice([0.0, 0.5, 1.0, rng.uniform()]))
        mb, k = random_bt(rng), random_kernels(rng)
        q_star = bt.update_q_bt(mb, k)
        q = _toward(q_star, bt_random_aux(rng, 2, 2, 2, 2), eps, BtAuxiliaries)
        gap = bt.f_beta_pq(mb, k, q, (s1, s2, a)) - bt.f_beta_pq(mb, k, q_star, (s1, s2, a))
        err, low = max(err, abs(gap - bt_kl_gap(mb, k, q, s1, s2, a))), min(low, gap)
    ok = err <= 1e-9 and low >= -1e-12
    report(2, ok, f"max |gap - KL sum| = {err:.3g} (limit 1e-9), min gap = {low:.3g} (limit -1e-12)")


@pytest.mark.slow
def test_criterion_3_oracle(report):
    worst, where = 0.0, None
    spec = GridSpec(step=0.02)
    for a2 in (0.25, 0.1):
        m = CeoSourceModel.bern_bsc(0.5, 0.25, a2)
        for s in ORACLE_S:
            for region in (1, 2):
                t = CeoTradeoff(*s, region)
                f_solver = ceo.solve(m, t, SolverOptions(restarts=10)).F
                f_oracle, _ = grid_min_ceo(m, t, spec, threads=4)
                diff = abs(f_solver - f_oracle)
                if diff >= worst:
                    worst, where = diff, (0.25, a2, s, region)
    report(3, worst <= 1e-3, f"max |F_solver - F_oracle| = {worst:.3g} at {where} (limit 1e-3)")


def test_criterion_4_endpoints(report, noise_hulls):
    d = np.array([v for _, v in equal_rate_slice(noise_hulls[0.25], R_GRID)])
    tail = d[R_GRID >= 2.0]
    ok = (
        abs(d[0] - 1.0) <= 1e-9
        and np.all(tail <= 0.6681 + 0.005)
        and np.all(np.diff(d) <= 1e-12)
        and np.all(np.diff(d, 2) >= -1e-12)
    )
    report(4, ok, f"D(0) = {d[0]:.12f}, max D(R>=2) = {tail.max():.6f} (limit 0.6731), monotone and convex")


def test_criterion_5_noise_ordering(report, noise_hulls):
    d = {a: np.array([v for _, v in equal_rate_slice(h, R_GRID)]) for a, h in noise_hulls.items()}
    gap = max(np.max(d[0.01] - d[0.1]), np.max(d[0.1] - d[0.25]))
    report(5, gap <= 1e-6, f"largest ordering violation {gap:.3g} over {len(R_GRID)} R values (limit 1e-6)")


def test_criterion_6_tuple_identity(report, noise_hulls, asym_hull, bt_hull):
    worst, n = 0.0, 0
    for hull in (*noise_hulls.values(), asym_hull, bt_hull):
        for p in hull.converged_points:
            worst = max(worst, abs(p.weighted_distortion - (p.F - p.s1 * p.R1 - p.s2 * p.R2)))
            n += 1
    report(6, worst <= 1e-8, f"max tuple residual {worst:.3g} over {n} converged solves (limit 1e-8)")


def test_criterion_7_halfspaces(report, noise_hulls, asym_hull, bt_hull):
    hulls = (*noise_hulls.values(), asym_hull, bt_hull)
    bad = sum(len(h.violations(1e-6)) for h in hulls)
    checks = sum(len(h.converged_points) * len(h.halfspaces) for h in hulls)
    report(7, bad == 0, f"{bad} violations in {checks} point/halfspace checks (tol 1e-6)")


def test_criterion_8_determinism(report, tmp_path):
    config = str(Path(__file__).resolve().parents[1] / "configs" / "ceo_symmetric.toml")
    blobs = []
    for tag in ("first", "second"):
        out = tmp_path / tag
        assert cli.main(["--config", config, "--out-dir", str(out), "--format", "csv"]) == 0
        blobs.append((out / "points.csv").read_bytes())
    report(8, blobs[0] == blobs[1], f"points.csv identical across two runs ({len(blobs[0])} bytes)")
