import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_ceo, random_kernels
from rdregion import ceo
from rdregion.ceo import CeoAuxiliaries, CeoSourceModel, CeoTradeoff, EncoderKernels
from rdregion.common import DomainError, SolverInputError, SolverOptions, softmax_rows
from rdregion.oracle import grid_min_ceo
from rdregion.prob import Pmf, conditional_entropy, kl_divergence, mutual_information

SYM_FLOOR = 0.6681  # H(X|Y1,Y2) for two BSC(0.25) looks at a fair bit


def loop_joint(m, k):
    """p(u1, u2, x) by explicit summation over y1, y2."""
    px, w1, w2 = m.arrays()
    nx, n1, n2 = m.sizes
    a, b = k.k1.shape[1], k.k2.shape[1]
    out = np.zeros((a, b, nx))
    for x in range(nx):
        for y1 in range(n1):
            for y2 in range(n2):
                for u1 in range(a):
                    for u2 in range(b):
                        out[u1, u2, x] += px[x] * w1[x, y1] * w2[x, y2] * k.k1[y1, u1] * k.k2[y2, u2]
    return out


def prob_core_objective(m, k, s1, s2):
    j = ceo.full_joint(m, k)
    return (
        conditional_entropy(j, ["X"], ["U1", "U2"])
        + s1 * mutual_information(j, ["Y1"], ["U1"], ["U2"])
        + s2 * mutual_information(j, ["Y2"], ["U2"])
    )


def kl_gap(m, k, q, s1, s2):
    """E_u KL(p(x|u) || q(x|u)) + s1 KL(p(u1,u2) || q(u1,u2)) + s2 KL(p(u2) || q(u2)), bits."""
    p = loop_joint(m, k)
    qx, qu, qu2 = q.arrays()
    puu = p.sum(axis=2)
    gap = 0.0
    for u1 in range(p.shape[0]):
        for u2 in range(p.shape[1]):
            if puu[u1, u2] > 0:
                gap += puu[u1, u2] * kl_divergence(Pmf(p[u1, u2] / puu[u1, u2]), Pmf(qx[u1, u2]))
    gap += s1 * kl_divergence(Pmf(puu.ravel()), Pmf(qu.ravel()))
    gap += s2 * kl_divergence(Pmf(puu.sum(axis=0)), Pmf(qu2))
    return gap


def random_aux(rng, nx, a, b):
    return CeoAuxiliaries.from_arrays(
        rng.dirichlet(np.ones(nx), size=(a, b)),
        rng.dirichlet(np.ones(a * b)).reshape(a, b),
        rng.dirichlet(np.ones(b)),
    )


# -- induced joint ------------------------------------------------------------


def test_induced_joint_trivial_kernels_give_px(sym_model):
    j = ceo.induced_joint(sym_model, EncoderKernels.trivial(2, 2))
    np.testing.assert_allclose(j.mass[0, 0], [0.5, 0.5], atol=1e-15)


def test_induced_joint_identity_kernels_give_observation_joint(sym_model):
    j = ceo.induced_joint(sym_model, EncoderKernels.identity(2, 2)).mass
    np.testing.assert_allclose(j.sum(axis=2), [[0.3125, 0.1875], [0.1875, 0.3125]], atol=1e-15)
    assert j[0, 0, 0] / j[0, 0].sum() == pytest.approx(0.9, abs=1e-14)


def test_induced_joint_matches_loops():
    rng = np.random.default_rng(3)
    m = random_ceo(rng, 3, 3, 2)
    k = random_kernels(rng, 3, 2, u1=2, u2=2)
    np.testing.assert_allclose(ceo.induced_joint(m, k).mass, loop_joint(m, k), atol=1e-15)


def test_kernel_cardinality_bound():
    with pytest.raises(SolverInputError):
        EncoderKernels.from_arrays(np.full((2, 3), 1 / 3), np.eye(2))


def test_kernel_alphabet_mismatch(sym_model):
    k = EncoderKernels.from_arrays(np.eye(3), np.eye(2))
    with pytest.raises(SolverInputError):
        ceo.f_s_p(sym_model, k, (1, 1))


# -- objectives ----------------------------------------------------------------


def test_f_s_p_trivial_kernels(sym_model):
    assert ceo.f_s_p(sym_model, EncoderKernels.trivial(2, 2), (0.3, 7)) == pytest.approx(1.0, abs=1e-15)


def test_f_s_p_identity_kernels_match_prob_core(sym_model):
    k = EncoderKernels.identity(2, 2)
    s1, s2 = 0.4, 1.3
    r1, r2, d = ceo.rate_distortion_tuple(sym_model, k)
    assert d == pytest.approx(SYM_FLOOR, abs=5e-5)
    assert ceo.f_s_p(sym_model, k, (s1, s2)) == pytest.approx(prob_core_objective(sym_model, k, s1, s2), abs=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_f_s_p_random_matches_prob_core(seed):
    rng = np.random.default_rng(seed)
    m = random_ceo(rng, 3, 3, 3)
    k = random_kernels(rng, 3, 3)
    s1, s2 = rng.uniform(0.01, 5, 2)
    assert ceo.f_s_p(m, k, (s1, s2)) == pytest.approx(prob_core_objective(m, k, s1, s2), abs=1e-12)


def test_f_s_pq_equals_f_s_p_at_induced_q(sym_model):
    k = random_kernels(np.random.default_rng(0))
    q = ceo.update_q(sym_model, k)
    assert ceo.f_s_pq(sym_model, k, q, (0.7, 0.2)) == pytest.approx(ceo.f_s_p(sym_model, k, (0.7, 0.2)), abs=1e-12)


def test_f_s_pq_perturbed_q_is_larger(sym_model):
    rng = np.random.default_rng(1)
    k = random_kernels(rng)
    qx, qu, qu2 = ceo.update_q(sym_model, k).arrays()
    qx2 = 0.9 * qx + 0.1 * rng.dirichlet(np.ones(2), size=(2, 2))
    q = CeoAuxiliaries.from_arrays(qx2, qu, qu2)
    assert ceo.f_s_pq(sym_model, k, q, (1, 1)) > ceo.f_s_p(sym_model, k, (1, 1)) + 1e-6


def test_f_s_pq_uniform_posterior_with_trivial_kernels():
    m = random_ceo(np.random.default_rng(2), 4, 2, 2)
    q = CeoAuxiliaries.from_arrays(np.full((1, 1, 4), 0.25), [[1.0]], [1.0])
    assert ceo.f_s_pq(m, EncoderKernels.trivial(2, 2), q, (1, 1)) == pytest.approx(2.0, abs=1e-14)


def test_f_s_pq_support_violation_is_inf(sym_model):
    k = EncoderKernels.identity(2, 2)
    q = CeoAuxiliaries.from_arrays(np.tile([1.0, 0.0], (2, 2, 1)), np.full((2, 2), 0.25), [0.5, 0.5])
    assert ceo.f_s_pq(sym_model, k, q, (1, 1)) == math.inf


# -- auxiliary update --------------------------------------------------------


def test_update_q_identity_kernels(sym_model):
    qx, qu, qu2 = ceo.update_q(sym_model, EncoderKernels.identity(2, 2)).arrays()
    assert qx[0, 0, 0] == pytest.approx(0.9, abs=1e-14)
    assert qx[0, 1, 0] == pytest.approx(0.5, abs=1e-14)
    np.testing.assert_allclose(qu, [[0.3125, 0.1875], [0.1875, 0.3125]], atol=1e-15)
    np.testing.assert_allclose(qu2, [0.5, 0.5], atol=1e-15)


def test_update_q_trivial_kernels(sym_model):
    qx, qu, qu2 = ceo.update_q(sym_model, EncoderKernels.trivial(2, 2)).arrays()
    np.testing.assert_allclose(qx[0, 0], [0.5, 0.5])
    assert qu.shape == (1, 1) and qu2.tolist() == [1.0]


def test_update_q_beats_random_probes(asym_model):
    rng = np.random.default_rng(4)
    k = random_kernels(rng)
    s = (0.6, 1.7)
    best = ceo.f_s_pq(asym_model, k, ceo.update_q(asym_model, k), s)
    for _ in range(100):
        assert ceo.f_s_pq(asym_model, k, random_aux(rng, 2, 2, 2), s) >= best - 1e-12


# -- kernel update exponents ---------------------------------------------------


def loop_rho(m, k, q, s1, s2, i):
    """Literal transcription of the update exponents with nested loops."""
    px, w1, w2 = m.arrays()
    nx, n1, n2 = m.sizes
    qx, qu, qu2 = q.arrays()
    a, b = k.k1.shape[1], k.k2.shape[1]
    py1, py2 = px @ w1, px @ w2
    pu1x, pu2x = w1 @ k.k1, w2 @ k.k2
    if i == 1:
        out = np.zeros((n1, a))
        for y in range(n1):
            for u1 in range(a):
                for x in range(nx):
                    pxy = px[x] * w1[x, y] / py1[y]
                    for u2 in range(b):
                        wgt = pxy * pu2x[x, u2]
                        out[y, u1] += wgt * (math.log(qx[u1, u2, x]) / s1 + math.log(qu[u1, u2]))
        return out
    pu2 = px @ pu2x
    out = np.zeros((n2, b))
    for y in range(n2):
        for u2 in range(b):
            for x in range(nx):
                pxy = px[x] * w2[x, y] / py2[y]
                for u1 in range(a):
                    wgt = pxy * pu1x[x, u1]
                    out[y, u2] += wgt * (math.log(qx[u1, u2, x]) / s2 + (s1 / s2) * math.log(qu[u1, u2]))
            out[y, u2] += math.log(qu2[u2]) - (s1 / s2) * math.log(pu2[u2])
    return out


@pytest.mark.parametrize("i", [1, 2])
@pytest.mark.parametrize("seed", range(3))
def test_rho_matches_loop_transcription(i, seed):
    rng = np.random.default_rng(seed)
    m = random_ceo(rng, 3, 3, 2)
    k = random_kernels(rng, 3, 2)
    q = random_aux(rng, 3, 3, 2)
    s1, s2 = rng.uniform(0.05, 4, 2)
    np.testing.assert_allclose(ceo.rho(m, k, q, (s1, s2), i), loop_rho(m, k, q, s1, s2, i), atol=1e-12)


def test_rho_single_symbol_u1(sym_model):
    k = EncoderKernels.from_arrays(np.ones((2, 1)), np.eye(2))
    r = ceo.rho(sym_model, k, ceo.update_q(sym_model, k), (1, 1), 1)
    assert r.shape == (2, 1)
    np.testing.assert_array_equal(softmax_rows(r), np.ones((2, 1)))


def test_rho_bit_flip_symmetry(sym_model):
    rng = np.random.default_rng(7)
    a, c = rng.uniform(0.55, 0.95, 2)
    k = EncoderKernels.from_arrays([[a, 1 - a], [1 - a, a]], [[c, 1 - c], [1 - c, c]])
    q = ceo.update_q(sym_model, k)
    for i in (1, 2):
        r = ceo.rho(sym_model, k, q, (0.8, 0.8), i)
        # flipping y together with u leaves the exponents unchanged
        np.testing.assert_allclose(r, r[::-1, ::-1], atol=1e-12)


def test_rho_bad_index(sym_model):
    k = EncoderKernels.identity(2, 2)
    with pytest.raises(SolverInputError):
        ceo.rho(sym_model, k, ceo.update_q(sym_model, k), (1, 1), 3)


def test_rho_rejects_q_missing_support(sym_model):
    k = EncoderKernels.identity(2, 2)
    q = CeoAuxiliaries.from_arrays(np.tile([1.0, 0.0], (2, 2, 1)), np.full((2, 2), 0.25), [0.5, 0.5])
    with pytest.raises(DomainError):
        ceo.rho(sym_model, k, q, (1, 1), 1)


# -- kernel update -----------------------------------------------------------


def test_update_p_first_block_is_softmax_of_rho(asym_model):
    rng = np.random.default_rng(5)
    k = random_kernels(rng)
    q = ceo.update_q(asym_model, k)
    s = (0.5, 2.0)
    new = ceo.update_p(asym_model, k, q, s, order="u1-first")
    np.testing.assert_allclose(new.k1, softmax_rows(ceo.rho(asym_model, k, q, s, 1)), atol=1e-14)


def test_update_p_first_block_minimizes(asym_model):
    rng = np.random.default_rng(6)
    k = random_kernels(rng)
    q = ceo.update_q(asym_model, k)
    s = (0.5, 2.0)
    k1 = softmax_rows(ceo.rho(asym_model, k, q, s, 1))
    best = ceo.f_s_pq(asym_model, EncoderKernels.from_arrays(k1, k.k2), q, s)
    for _ in range(100):
        probe = EncoderKernels.from_arrays(rng.dirichlet(np.ones(2), size=2), k.k2)
        assert ceo.f_s_pq(asym_model, probe, q, s) >= best - 1e-12


@pytest.mark.parametrize("order", ["u1-first", "u2-first"])
def test_update_p_never_increases(order):
    rng = np.random.default_rng(8)
    for _ in range(30):
        m = random_ceo(rng)
        k = random_kernels(rng)
        q = ceo.update_q(m, k)
        s = tuple(rng.uniform(0.01, 10, 2))
        assert ceo.f_s_pq(m, ceo.update_p(m, k, q, s, order), q, s) <= ceo.f_s_pq(m, k, q, s) + 1e-12


def test_update_p_saturates_for_clean_observations():
    # noiseless looks at a fair bit and a tiny rate price: the kernels become deterministic
    m = CeoSourceModel.bern_bsc(0.5, 0.0, 0.0)
    rep = ceo.solve(m, (0.01, 0.01), SolverOptions(restarts=3))
    assert rep.D < 1e-6
    k1 = rep.kernels.k1
    assert min(np.abs(k1 - np.eye(2)).max(), np.abs(k1 - np.eye(2)[:, ::-1]).max()) < 1e-3


# -- solver --------------------------------------------------------------------


def test_solve_large_weights_give_zero_rate(sym_model):
    rep = ceo.solve(sym_model, (10, 10))
    assert rep.converged
    np.testing.assert_allclose(rep.tuple, (0, 0, 1), atol=1e-8)


def test_solve_small_weights_approach_floor(sym_model):
    rep = ceo.solve(sym_model, (0.01, 0.01))
    assert abs(rep.D - SYM_FLOOR) < 0.01
    assert rep.identity_residual < 1e-8


def test_solve_objective_trace_is_monotone(asym_model):
    rep = ceo.solve(asym_model, (0.3, 0.6), SolverOptions(restarts=1))
    assert np.all(np.diff(rep.objective) <= 1e-10)


@pytest.mark.parametrize("s", [(0.05, 0.05), (0.5, 2.0)])
@pytest.mark.parametrize("region", [1, 2])
def test_solve_agrees_with_grid_oracle(asym_model, s, region):
    t = CeoTradeoff(*s, region)
    rep = ceo.solve(asym_model, t)
    f_grid, _ = grid_min_ceo(asym_model, t)
    assert rep.F <= f_grid + 1e-9
    assert f_grid - rep.F <= 1e-3


def test_solve_is_deterministic(asym_model):
    a = ceo.solve(asym_model, (0.2, 0.4), SolverOptions(restarts=3, rng_seed=11))
    b = ceo.solve(asym_model, (0.2, 0.4), SolverOptions(restarts=3, rng_seed=11))
    assert a.F == b.F and a.tuple == b.tuple


def test_solve_respects_u_sizes(asym_model):
    rep = ceo.solve(asym_model, CeoTradeoff(0.1, 0.1, 2), SolverOptions(u_sizes=(1, 2), restarts=2))
    assert rep.kernels.k1.shape == (2, 1) and rep.kernels.k2.shape == (2, 2)
    with pytest.raises(SolverInputError):
        ceo.solve(asym_model, (1, 1), SolverOptions(u_sizes=(3, 2)))


def test_tradeoff_validation():
    with pytest.raises(SolverInputError):
        CeoTradeoff(0, 1)
    with pytest.raises(SolverInputError):
        CeoTradeoff(1, 1, 3)


# -- properties ---------------------------------------------------------------

weights = st.floats(0.01, 10.0)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), weights, weights)
def test_gap_identity(seed, s1, s2):
    rng = np.random.default_rng(seed)
    m = random_ceo(rng, 2, 2, 2)
    k = random_kernels(rng)
    q = random_aux(rng, 2, 2, 2)
    lhs = ceo.f_s_pq(m, k, q, (s1, s2)) - ceo.f_s_p(m, k, (s1, s2))
    assert lhs == pytest.approx(kl_gap(m, k, q, s1, s2), abs=1e-9)
    assert lhs >= -1e-12


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 2))
def test_rho_shift_invariance(seed, i):
    rng = np.random.default_rng(seed)
    m = random_ceo(rng)
    k = random_kernels(rng)
    r = ceo.rho(m, k, ceo.update_q(m, k), tuple(rng.uniform(0.01, 10, 2)), i)
    shift = rng.normal(scale=50, size=(r.shape[0], 1))
    np.testing.assert_allclose(softmax_rows(r + shift), softmax_rows(r), atol=1e-12)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**32 - 1), weights, weights)
def test_solution_supports_random_kernels(seed, s1, s2):
    rng = np.random.default_rng(seed)
    m = CeoSourceModel.bern_bsc(0.5, 0.25, 0.1)
    rep = ceo.solve(m, (s1, s2), SolverOptions(restarts=4, rng_seed=seed % 1000))
    for _ in range(30):
        assert ceo.f_s_p(m, random_kernels(rng), (s1, s2)) >= rep.F - 1e-4


@settings(max_examples=8, deadline=None)
@given(weights, weights)
def test_region_swap_symmetry(s1, s2):
    m = CeoSourceModel.bern_bsc(0.5, 0.25, 0.25)
    opts = SolverOptions(restarts=3)
    a = ceo.solve(m, CeoTradeoff(s1, s2, 2), opts)
    b = ceo.solve(m, CeoTradeoff(s2, s1, 1), opts)
    assert a.F == pytest.approx(b.F, abs=1e-9)
    assert (a.R1, a.R2) == pytest.approx((b.R2, b.R1), abs=1e-6)
