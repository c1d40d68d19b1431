"""Alternating minimization for two-encoder multiterminal (Berger-Tung) coding under log-loss.

For ``beta = (s1, s2, alpha)`` the solver minimizes

    alpha H(Y1|U1,U2) + (1-alpha) H(Y2|U1,U2) + s1 I(Y1;U1|U2) + s2 I(Y2;U2)

over p(u1|y1), p(u2|y2). The auxiliaries are
Q = {q(y1|u1,u2), q(y2|u1,u2), q(u1,u2), q(u2)}.

Internal arrays: ``pyy[y1, y2]``, kernels ``k_i[y, u]``,
``qy1[u1, u2, y1]``, ``qy2[u1, u2, y2]``, ``qu[u1, u2]``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

from .ceo import EncoderKernels
from .common import (
    LN2,
    SolverInputError,
    SolverOptions,
    backtrack_u2,
    check_cover,
    conditional_rows,
    cross_entropy_nats,
    initial_kernel,
    is_converged,
    neg_entropy_nats,
    restart_rngs,
    safe_log,
    softmax_rows,
)
from .prob import CondPmf, JointPmf, Pmf, entropy_bits

log = logging.getLogger(__name__)

IDENTITY_TOL = 1e-8


@dataclass(frozen=True)
class BtSourceModel:
    py1y2: JointPmf

    def __post_init__(self):
        if self.py1y2.axes != ("Y1", "Y2"):
            raise SolverInputError(f"expected axes ('Y1', 'Y2'), got {self.py1y2.axes}")

    @classmethod
    def from_array(cls, table) -> "BtSourceModel":
        return cls(JointPmf(("Y1", "Y2"), table))

    @classmethod
    def dsbs(cls, p: float = 0.1) -> "BtSourceModel":
        """Doubly symmetric binary source: Y1 ~ Bern(1/2), Y2 = Y1 xor Bern(p)."""
        if not 0.0 <= p <= 1.0:
            raise SolverInputError(f"p = {p} is not a probability")
        return cls.from_array([[(1 - p) / 2, p / 2], [p / 2, (1 - p) / 2]])

    @property
    def table(self) -> np.ndarray:
        return self.py1y2.mass

    @property
    def sizes(self) -> tuple[int, int]:
        n1, n2 = self.table.shape
        return n1, n2

    def swapped(self) -> "BtSourceModel":
        return BtSourceModel.from_array(self.table.T)


@dataclass(frozen=True)
class BtAuxiliaries:
    qy1_given_u1u2: CondPmf
    qy2_given_u1u2: CondPmf
    qu1u2: JointPmf
    qu2: Pmf

    @classmethod
    def from_arrays(cls, qy1, qy2, qu, qu2) -> "BtAuxiliaries":
        """``qy1`` is (U1, U2, Y1), ``qy2`` is (U1, U2, Y2), ``qu`` is (U1, U2)."""
        qy1, qy2 = np.asarray(qy1, float), np.asarray(qy2, float)
        a, b, n1 = qy1.shape
        n2 = qy2.shape[2]
        return cls(
            CondPmf(qy1.reshape(a * b, n1), ("U1", "U2"), ("Y1",), (a, b), (n1,)),
            CondPmf(qy2.reshape(a * b, n2), ("U1", "U2"), ("Y2",), (a, b), (n2,)),
            JointPmf(("U1", "U2"), qu),
            Pmf(qu2),
        )

    def arrays(self):
        return (
            self.qy1_given_u1u2.table,
            self.qy2_given_u1u2.table,
            self.qu1u2.mass,
            self.qu2.mass,
        )


@dataclass(frozen=True)
class BtTradeoff:
    s1: float
    s2: float
    alpha: float
    region_index: int = 1

    def __post_init__(self):
        if not (self.s1 > 0 and self.s2 > 0):
            raise SolverInputError(f"s1 and s2 must be > 0, got ({self.s1}, {self.s2})")
        if not 0.0 <= self.alpha <= 1.0:
            raise SolverInputError(f"alpha = {self.alpha} outside [0, 1]")
        if self.region_index not in (1, 2):
            raise SolverInputError("region_index must be 1 or 2")

    @property
    def abar(self) -> float:
        return 1.0 - self.alpha


@dataclass(frozen=True)
class BtSolveReport:
    tradeoff: BtTradeoff
    kernels: EncoderKernels
    tuple: tuple[float, float, float, float]
    weighted_distortion: float
    F: float
    objective: tuple[float, ...] = field(repr=False)
    iterations: int
    converged: bool
    restarts_used: int
    identity_residual: float


def _as_bt_tradeoff(beta) -> BtTradeoff:
    if isinstance(beta, BtTradeoff):
        return beta
    return BtTradeoff(*beta)


class _Induced(NamedTuple):
    joint: np.ndarray  # (U1, U2, Y1, Y2)
    puuy1: np.ndarray
    puuy2: np.ndarray
    puu: np.ndarray
    pu1: np.ndarray
    pu2: np.ndarray


def _induce(pyy, k1, k2) -> _Induced:
    joint = np.einsum("cd,ca,db->abcd", pyy, k1, k2)
    puuy1 = joint.sum(axis=3)
    puuy2 = joint.sum(axis=2)
    puu = puuy1.sum(axis=2)
    return _Induced(joint, puuy1, puuy2, puu, puu.sum(axis=1), puu.sum(axis=0))


def _weighted_xent(coef: float, p, q) -> float:
    # a zero weight drops the term even where q fails to cover p
    return 0.0 if coef == 0 else coef * cross_entropy_nats(p, q)


def _f_pq_nats(pyy, k1, k2, qy1, qy2, qu, qu2, s1, s2, alpha, ind: _Induced | None = None) -> float:
    ind = ind if ind is not None else _induce(pyy, k1, k2)
    py1, py2 = pyy.sum(axis=1), pyy.sum(axis=0)
    return (
        s1 * (neg_entropy_nats(py1[:, None] * k1) - neg_entropy_nats(py1))
        + s2 * (neg_entropy_nats(py2[:, None] * k2) - neg_entropy_nats(py2))
        + s1 * neg_entropy_nats(ind.pu2)
        + s2 * cross_entropy_nats(ind.pu2, qu2)
        + _weighted_xent(alpha, ind.puuy1, qy1)
        + _weighted_xent(1.0 - alpha, ind.puuy2, qy2)
        + s1 * cross_entropy_nats(ind.puu, qu)
    )


def _q_from(ind: _Induced):
    a, b, n1 = ind.puuy1.shape
    n2 = ind.puuy2.shape[2]
    qy1 = conditional_rows(ind.puuy1.reshape(a * b, n1)).reshape(a, b, n1)
    qy2 = conditional_rows(ind.puuy2.reshape(a * b, n2)).reshape(a, b, n2)
    return qy1, qy2, ind.puu, ind.pu2


def _mu_first(py2_y1, k2, qy1, qy2, qu, s1, alpha) -> np.ndarray:
    pu2_y1 = py2_y1 @ k2  # (Y1, U2)
    return (
        (alpha / s1) * np.einsum("cb,abc->ca", pu2_y1, safe_log(qy1))
        + ((1.0 - alpha) / s1) * np.einsum("cd,db,abd->ca", py2_y1, k2, safe_log(qy2))
        + pu2_y1 @ safe_log(qu).T
    )


def _mu_second(py1_y2, k1, pu2_prev, qy1, qy2, qu, qu2, s1, s2, alpha) -> np.ndarray:
    pu1_y2 = py1_y2 @ k1  # (Y2, U1)
    return (
        (alpha / s2) * np.einsum("dc,ca,abc->db", py1_y2, k1, safe_log(qy1))
        + ((1.0 - alpha) / s2) * np.einsum("da,abd->db", pu1_y2, safe_log(qy2))
        + (s1 / s2) * (pu1_y2 @ safe_log(qu))
        + safe_log(qu2)[None, :]
        - (s1 / s2) * safe_log(pu2_prev)[None, :]
    )


def _update_p_arrays(pyy, k1, k2, qy1, qy2, qu, qu2, s1, s2, alpha, order="u1-first", max_backtracks=40):
    py2_y1 = conditional_rows(pyy)
    py1_y2 = conditional_rows(pyy.T)
    py2 = pyy.sum(axis=0)

    def obj(a, b):
        return _f_pq_nats(pyy, a, b, qy1, qy2, qu, qu2, s1, s2, alpha)

    def step_u1(k1, k2):
        return softmax_rows(_mu_first(py2_y1, k2, qy1, qy2, qu, s1, alpha))

    def step_u2(k1, k2):
        mu = _mu_second(py1_y2, k1, py2 @ k2, qy1, qy2, qu, qu2, s1, s2, alpha)
        new, _ = backtrack_u2(lambda b: obj(k1, b), k2, softmax_rows(mu), obj(k1, k2), max_backtracks)
        return new

    if order == "u1-first":
        k1 = step_u1(k1, k2)
        k2 = step_u2(k1, k2)
    else:
        k2 = step_u2(k1, k2)
        k1 = step_u1(k1, k2)
    return k1, k2


def _check_shapes(m: BtSourceModel, k: EncoderKernels) -> None:
    n1, n2 = m.sizes
    if k.pu1_given_y1.given_size != n1 or k.pu2_given_y2.given_size != n2:
        raise SolverInputError("kernel input alphabets do not match |Y1|, |Y2|")


def _check_q(ind: _Induced, qy1, qy2, qu, qu2, alpha) -> None:
    if alpha > 0:
        check_cover(qy1, ind.puuy1, "q(y1|u1,u2)")
    if alpha < 1:
        check_cover(qy2, ind.puuy2, "q(y2|u1,u2)")
    check_cover(qu, ind.puu, "q(u1,u2)")
    check_cover(qu2, ind.pu2, "q(u2)")


def induced_joint(m: BtSourceModel, k: EncoderKernels) -> JointPmf:
    _check_shapes(m, k)
    return JointPmf(("U1", "U2", "Y1", "Y2"), _induce(m.table, k.k1, k.k2).joint)


def _tuple_bits(pyy, k1, k2) -> tuple[float, float, float, float]:
    ind = _induce(pyy, k1, k2)
    py1, py2 = pyy.sum(axis=1), pyy.sum(axis=0)
    h_uu = entropy_bits(ind.puu)
    d1 = entropy_bits(ind.puuy1) - h_uu
    d2 = entropy_bits(ind.puuy2) - h_uu
    h_u1, h_u2 = entropy_bits(ind.pu1), entropy_bits(ind.pu2)
    i_u1y1 = h_u1 - float(sum(py1[y] * entropy_bits(k1[y]) for y in range(len(py1))))
    i_u2y2 = h_u2 - float(sum(py2[y] * entropy_bits(k2[y]) for y in range(len(py2))))
    i_u1u2 = h_u1 + h_u2 - h_uu
    return max(i_u1y1 - i_u1u2, 0.0), max(i_u2y2, 0.0), max(d1, 0.0), max(d2, 0.0)


def rate_distortion_tuple(m: BtSourceModel, k: EncoderKernels) -> tuple[float, float, float, float]:
    """(I(Y1;U1|U2), I(Y2;U2), H(Y1|U1,U2), H(Y2|U1,U2)) in bits."""
    _check_shapes(m, k)
    return _tuple_bits(m.table, k.k1, k.k2)


def f_beta_p(m: BtSourceModel, k: EncoderKernels, beta) -> float:
    """Q-free objective in bits: weighted distortion plus weighted rates."""
    beta = _as_bt_tradeoff(beta)
    r1, r2, d1, d2 = rate_distortion_tuple(m, k)
    return beta.alpha * d1 + beta.abar * d2 + beta.s1 * r1 + beta.s2 * r2


def f_beta_pq(m: BtSourceModel, k: EncoderKernels, q: BtAuxiliaries, beta) -> float:
    """Variational objective F_beta(P, Q) in bits; ``math.inf`` on support violation."""
    beta = _as_bt_tradeoff(beta)
    _check_shapes(m, k)
    val = _f_pq_nats(m.table, k.k1, k.k2, *q.arrays(), beta.s1, beta.s2, beta.alpha)
    return val / LN2 if math.isfinite(val) else math.inf


def update_q_bt(m: BtSourceModel, k: EncoderKernels) -> BtAuxiliaries:
    _check_shapes(m, k)
    return BtAuxiliaries.from_arrays(*_q_from(_induce(m.table, k.k1, k.k2)))


def mu(m: BtSourceModel, k: EncoderKernels, q: BtAuxiliaries, beta, i: int) -> np.ndarray:
    """Exponent table of the kernel update for encoder ``i``, shape (|Y_i|, |U_i|), in nats."""
    beta = _as_bt_tradeoff(beta)
    _check_shapes(m, k)
    pyy = m.table
    qy1, qy2, qu, qu2 = q.arrays()
    ind = _induce(pyy, k.k1, k.k2)
    _check_q(ind, qy1, qy2, qu, qu2, beta.alpha)
    if i == 1:
        return _mu_first(conditional_rows(pyy), k.k2, qy1, qy2, qu, beta.s1, beta.alpha)
    if i == 2:
        return _mu_second(
            conditional_rows(pyy.T), k.k1, ind.pu2, qy1, qy2, qu, qu2, beta.s1, beta.s2, beta.alpha
        )
    raise SolverInputError("encoder index must be 1 or 2")


def update_p_bt(m: BtSourceModel, k_prev: EncoderKernels, q: BtAuxiliaries, beta, order: str = "u1-first") -> EncoderKernels:
    beta = _as_bt_tradeoff(beta)
    _check_shapes(m, k_prev)
    qy1, qy2, qu, qu2 = q.arrays()
    _check_q(_induce(m.table, k_prev.k1, k_prev.k2), qy1, qy2, qu, qu2, beta.alpha)
    k1, k2 = _update_p_arrays(
        m.table, k_prev.k1, k_prev.k2, qy1, qy2, qu, qu2, beta.s1, beta.s2, beta.alpha, order
    )
    return EncoderKernels.from_arrays(k1, k2)


def _run_once(pyy, k1, k2, s1, s2, alpha, opts: SolverOptions):
    q = _q_from(_induce(pyy, k1, k2))
    f = _f_pq_nats(pyy, k1, k2, *q, s1, s2, alpha)
    trace = [f / LN2]
    converged = False
    it = 0
    for it in range(1, opts.max_iters + 1):
        k1, k2 = _update_p_arrays(pyy, k1, k2, *q, s1, s2, alpha, opts.order, opts.max_backtracks)
        ind = _induce(pyy, k1, k2)
        q = _q_from(ind)
        f_new = _f_pq_nats(pyy, k1, k2, *q, s1, s2, alpha, ind)
        trace.append(f_new / LN2)
        if is_converged(f, f_new, opts.tol):
            converged = True
            break
        f = f_new
    return k1, k2, trace, it, converged


def solve_bt(m: BtSourceModel, beta, opts: SolverOptions | None = None) -> BtSolveReport:
    """Best-of-restarts solve; region 2 swaps the sources (and alpha with 1 - alpha)."""
    beta = _as_bt_tradeoff(beta)
    opts = opts or SolverOptions()
    if beta.region_index == 1:
        model, (s1, s2, alpha) = m, (beta.s1, beta.s2, beta.alpha)
    else:
        model, (s1, s2, alpha) = m.swapped(), (beta.s2, beta.s1, beta.abar)
        if opts.u_sizes is not None:
            opts = replace(opts, u_sizes=opts.u_sizes[::-1])
    n1, n2 = model.sizes
    u1, u2 = opts.u_sizes or (n1, n2)
    if u1 > n1 or u2 > n2:
        raise SolverInputError(f"u_sizes {opts.u_sizes} exceed |Y| = ({n1}, {n2})")
    pyy = model.table
    best = None
    for rng in restart_rngs(opts.rng_seed, opts.restarts):
        k1 = initial_kernel(rng, n1, u1, opts.init)
        k2 = initial_kernel(rng, n2, u2, opts.init)
        run = _run_once(pyy, k1, k2, s1, s2, alpha, opts)
        if best is None or run[2][-1] < best[2][-1]:
            best = run
    k1, k2, trace, iters, converged = best
    r1, r2, d1, d2 = _tuple_bits(pyy, k1, k2)
    f = trace[-1]
    wd = alpha * d1 + (1.0 - alpha) * d2
    residual = abs(wd - (-s1 * r1 - s2 * r2 + f))
    if residual > IDENTITY_TOL:
        log.warning("tuple identity residual %.3g at beta=%s", residual, beta)
    kernels = EncoderKernels.from_arrays(k1, k2)
    if beta.region_index == 2:
        kernels = kernels.swapped()
        r1, r2, d1, d2 = r2, r1, d2, d1
    return BtSolveReport(
        tradeoff=beta,
        kernels=kernels,
        tuple=(r1, r2, d1, d2),
        weighted_distortion=wd,
        F=f,
        objective=tuple(trace),
        iterations=iters,
        converged=converged,
        restarts_used=opts.restarts,
        identity_residual=residual,
    )
