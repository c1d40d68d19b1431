"""Alternating minimization for the two-encoder CEO problem under log-loss.

For trade-off weights ``s = (s1, s2)`` the solver minimizes

    F_s(P) = H(X|U1,U2) + s1 I(Y1;U1|U2) + s2 I(Y2;U2)

over the encoder kernels P = {p(u1|y1), p(u2|y2)} by alternating between
the kernels and a set of auxiliary laws Q = {q(x|u1,u2), q(u1,u2), q(u2)}.
The minimizer gives one boundary tuple (R1, R2, D) of the region in which
encoder 2 is decoded first (region 1); region 2 swaps the encoders.

Array conventions (internal): ``W_i[x, y]`` = p(y_i|x), kernels
``k_i[y, u]`` = p(u_i|y_i), posterior ``qx[u1, u2, x]``, ``qu[u1, u2]``.
Internal objective values are in nats; everything returned is in bits.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

from .common import (
    LN2,
    DomainError,
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
class CeoSourceModel:
    """p(x) p(y1|x) p(y2|x); the Markov chain Y1 - X - Y2 holds by construction."""

    px: Pmf
    py1_given_x: CondPmf
    py2_given_x: CondPmf

    def __post_init__(self):
        nx = self.px.support_size
        for name in ("py1_given_x", "py2_given_x"):
            c = getattr(self, name)
            if c.given_size != nx:
                raise SolverInputError(f"{name} has {c.given_size} rows, |X| = {nx}")

    @classmethod
    def from_arrays(cls, px, py1_given_x, py2_given_x) -> "CeoSourceModel":
        return cls(
            Pmf(px),
            CondPmf(py1_given_x, ("X",), ("Y1",)),
            CondPmf(py2_given_x, ("X",), ("Y2",)),
        )

    @classmethod
    def bern_bsc(cls, p: float = 0.5, alpha1: float = 0.25, alpha2: float = 0.25) -> "CeoSourceModel":
        """X ~ Bern(p), Y_i = X xor Z_i with Z_i ~ Bern(alpha_i)."""
        for name, v in (("p", p), ("alpha1", alpha1), ("alpha2", alpha2)):
            if not 0.0 <= v <= 1.0:
                raise SolverInputError(f"{name} = {v} is not a probability")

        def bsc(a):
            return [[1 - a, a], [a, 1 - a]]

        return cls.from_arrays([1 - p, p], bsc(alpha1), bsc(alpha2))

    @property
    def sizes(self) -> tuple[int, int, int]:
        return self.px.support_size, self.py1_given_x.out_size, self.py2_given_x.out_size

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.px.mass, self.py1_given_x.rows, self.py2_given_x.rows

    def swapped(self) -> "CeoSourceModel":
        return CeoSourceModel.from_arrays(self.px.mass, self.py2_given_x.rows, self.py1_given_x.rows)

    def joint(self) -> JointPmf:
        px, w1, w2 = self.arrays()
        return JointPmf(("X", "Y1", "Y2"), np.einsum("x,xa,xb->xab", px, w1, w2))


@dataclass(frozen=True)
class EncoderKernels:
    pu1_given_y1: CondPmf
    pu2_given_y2: CondPmf

    def __post_init__(self):
        for c in (self.pu1_given_y1, self.pu2_given_y2):
            if c.out_size > c.given_size:
                raise SolverInputError(
                    f"|U| = {c.out_size} exceeds the cardinality bound |Y| = {c.given_size}"
                )

    @classmethod
    def from_arrays(cls, k1, k2) -> "EncoderKernels":
        return cls(CondPmf(k1, ("Y1",), ("U1",)), CondPmf(k2, ("Y2",), ("U2",)))

    @property
    def k1(self) -> np.ndarray:
        return self.pu1_given_y1.rows

    @property
    def k2(self) -> np.ndarray:
        return self.pu2_given_y2.rows

    def swapped(self) -> "EncoderKernels":
        return EncoderKernels.from_arrays(self.k2, self.k1)

    @classmethod
    def identity(cls, n1: int, n2: int) -> "EncoderKernels":
        return cls.from_arrays(np.eye(n1), np.eye(n2))

    @classmethod
    def trivial(cls, n1: int, n2: int) -> "EncoderKernels":
        return cls.from_arrays(np.ones((n1, 1)), np.ones((n2, 1)))


@dataclass(frozen=True)
class CeoAuxiliaries:
    qx_given_u1u2: CondPmf
    qu1u2: JointPmf
    qu2: Pmf

    @classmethod
    def from_arrays(cls, qx, qu, qu2) -> "CeoAuxiliaries":
        """``qx`` has shape (U1, U2, X); ``qu`` has shape (U1, U2)."""
        qx = np.asarray(qx, dtype=float)
        n1, n2, nx = qx.shape
        return cls(
            CondPmf(qx.reshape(n1 * n2, nx), ("U1", "U2"), ("X",), (n1, n2), (nx,)),
            JointPmf(("U1", "U2"), qu),
            Pmf(qu2),
        )

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.qx_given_u1u2.table, self.qu1u2.mass, self.qu2.mass


@dataclass(frozen=True)
class CeoTradeoff:
    s1: float
    s2: float
    region_index: int = 1

    def __post_init__(self):
        if not (self.s1 > 0 and self.s2 > 0):
            raise SolverInputError(f"s1 and s2 must be > 0, got ({self.s1}, {self.s2})")
        if self.region_index not in (1, 2):
            raise SolverInputError("region_index must be 1 or 2")


@dataclass(frozen=True)
class CeoSolveReport:
    tradeoff: CeoTradeoff
    kernels: EncoderKernels
    tuple: tuple[float, float, float]
    F: float
    objective: tuple[float, ...] = field(repr=False)
    iterations: int
    converged: bool
    restarts_used: int
    identity_residual: float

    @property
    def R1(self) -> float:
        return self.tuple[0]

    @property
    def R2(self) -> float:
        return self.tuple[1]

    @property
    def D(self) -> float:
        return self.tuple[2]


def _as_tradeoff(s) -> CeoTradeoff:
    if isinstance(s, CeoTradeoff):
        return s
    return CeoTradeoff(*s)


# -- array kernels ---------------------------------------------------------


class _Induced(NamedTuple):
    pu1x: np.ndarray  # (X, U1)
    pu2x: np.ndarray  # (X, U2)
    joint: np.ndarray  # (U1, U2, X)
    puu: np.ndarray  # (U1, U2)
    pu1: np.ndarray
    pu2: np.ndarray


def _induce(px, w1, w2, k1, k2) -> _Induced:
    pu1x = w1 @ k1
    pu2x = w2 @ k2
    joint = np.einsum("x,xa,xb->abx", px, pu1x, pu2x)
    puu = joint.sum(axis=2)
    return _Induced(pu1x, pu2x, joint, puu, puu.sum(axis=1), puu.sum(axis=0))


def _posterior_x_given_y(px, w) -> np.ndarray:
    """p(x|y) as a (Y, X) table."""
    return conditional_rows((px[:, None] * w).T)


def _f_pq_nats(px, w1, w2, k1, k2, qx, qu, qu2, s1, s2, ind: _Induced | None = None) -> float:
    ind = ind if ind is not None else _induce(px, w1, w2, k1, k2)
    py1, py2 = px @ w1, px @ w2
    return (
        cross_entropy_nats(ind.joint, qx)
        + s1 * cross_entropy_nats(ind.puu, qu)
        + s2 * cross_entropy_nats(ind.pu2, qu2)
        + s1 * neg_entropy_nats(py1[:, None] * k1) - s1 * neg_entropy_nats(py1)
        + s2 * neg_entropy_nats(py2[:, None] * k2) - s2 * neg_entropy_nats(py2)
        + s1 * neg_entropy_nats(ind.pu2)
    )


def _q_from(ind: _Induced):
    n1, n2, nx = ind.joint.shape
    qx = conditional_rows(ind.joint.reshape(n1 * n2, nx)).reshape(n1, n2, nx)
    return qx, ind.puu, ind.pu2


def _rho_first(pxy1, pu2x, qx, qu, s1) -> np.ndarray:
    # w[y1, u2, x] = p(x|y1) p(u2|x)
    w = pxy1[:, None, :] * pu2x.T[None, :, :]
    return (
        np.einsum("ybx,abx->ya", w, safe_log(qx)) / s1
        + w.sum(axis=2) @ safe_log(qu).T
    )


def _rho_second(pxy2, pu1x, pu2_prev, qx, qu, qu2, s1, s2) -> np.ndarray:
    # w[y2, u1, x] = p(x|y2) p(u1|x)
    w = pxy2[:, None, :] * pu1x.T[None, :, :]
    return (
        np.einsum("yax,abx->yb", w, safe_log(qx)) / s2
        + (s1 / s2) * (w.sum(axis=2) @ safe_log(qu))
        + safe_log(qu2)[None, :]
        - (s1 / s2) * safe_log(pu2_prev)[None, :]
    )


def _check_q(ind: _Induced, qx, qu, qu2) -> None:
    check_cover(qx, ind.joint, "q(x|u1,u2)")
    check_cover(qu, ind.puu, "q(u1,u2)")
    check_cover(qu2, ind.pu2, "q(u2)")


def _update_p_arrays(px, w1, w2, k1, k2, qx, qu, qu2, s1, s2, order="u1-first", max_backtracks=40):
    pxy1 = _posterior_x_given_y(px, w1)
    pxy2 = _posterior_x_given_y(px, w2)
    py2 = px @ w2

    def obj(a, b):
        return _f_pq_nats(px, w1, w2, a, b, qx, qu, qu2, s1, s2)

    def step_u1(k1, k2):
        return softmax_rows(_rho_first(pxy1, w2 @ k2, qx, qu, s1))

    def step_u2(k1, k2):
        rho = _rho_second(pxy2, w1 @ k1, py2 @ k2, qx, qu, qu2, s1, s2)
        cand = softmax_rows(rho)
        new, _ = backtrack_u2(lambda b: obj(k1, b), k2, cand, obj(k1, k2), max_backtracks)
        return new

    if order == "u1-first":
        k1 = step_u1(k1, k2)
        k2 = step_u2(k1, k2)
    else:
        k2 = step_u2(k1, k2)
        k1 = step_u1(k1, k2)
    return k1, k2


# -- public operations -----------------------------------------------------


def induced_joint(m: CeoSourceModel, k: EncoderKernels) -> JointPmf:
    """p(u1, u2, x) = p(x) p(u1|x) p(u2|x) with p(u_i|x) = sum_y p(u_i|y) p(y|x)."""
    px, w1, w2 = m.arrays()
    _check_shapes(m, k)
    return JointPmf(("U1", "U2", "X"), _induce(px, w1, w2, k.k1, k.k2).joint)


def full_joint(m: CeoSourceModel, k: EncoderKernels) -> JointPmf:
    """Joint law of (X, Y1, Y2, U1, U2) under the long Markov chain."""
    px, w1, w2 = m.arrays()
    _check_shapes(m, k)
    return JointPmf(
        ("X", "Y1", "Y2", "U1", "U2"),
        np.einsum("x,xa,xb,ac,bd->xabcd", px, w1, w2, k.k1, k.k2),
    )


def _check_shapes(m: CeoSourceModel, k: EncoderKernels) -> None:
    _, n1, n2 = m.sizes
    if k.pu1_given_y1.given_size != n1 or k.pu2_given_y2.given_size != n2:
        raise SolverInputError(
            f"kernel input alphabets ({k.pu1_given_y1.given_size}, {k.pu2_given_y2.given_size})"
            f" do not match |Y1|, |Y2| = ({n1}, {n2})"
        )


def _tuple_bits(px, w1, w2, k1, k2) -> tuple[float, float, float]:
    ind = _induce(px, w1, w2, k1, k2)
    py1, py2 = px @ w1, px @ w2
    h_uu = entropy_bits(ind.puu)
    h_u1, h_u2 = entropy_bits(ind.pu1), entropy_bits(ind.pu2)
    d = entropy_bits(ind.joint) - h_uu
    i_u1y1 = h_u1 - float(sum(py1[y] * entropy_bits(k1[y]) for y in range(len(py1))))
    i_u2y2 = h_u2 - float(sum(py2[y] * entropy_bits(k2[y]) for y in range(len(py2))))
    i_u1u2 = h_u1 + h_u2 - h_uu
    # Markov U1 - Y1 - U2: I(Y1;U1|U2) = I(U1;Y1) - I(U1;U2)
    r1 = max(i_u1y1 - i_u1u2, 0.0)
    r2 = max(i_u2y2, 0.0)
    return r1, r2, max(d, 0.0)


def rate_distortion_tuple(m: CeoSourceModel, k: EncoderKernels) -> tuple[float, float, float]:
    """(I(Y1;U1|U2), I(Y2;U2), H(X|U1,U2)) in bits for region-1 labeling."""
    _check_shapes(m, k)
    return _tuple_bits(*m.arrays(), k.k1, k.k2)


def f_s_p(m: CeoSourceModel, k: EncoderKernels, s) -> float:
    """H(X|U1,U2) + s1 I(Y1;U1|U2) + s2 I(Y2;U2), in bits."""
    s = _as_tradeoff(s)
    r1, r2, d = rate_distortion_tuple(m, k)
    return d + s.s1 * r1 + s.s2 * r2


def f_s_pq(m: CeoSourceModel, k: EncoderKernels, q: CeoAuxiliaries, s) -> float:
    """Variational objective F_s(P, Q) in bits; ``math.inf`` on support violation."""
    s = _as_tradeoff(s)
    _check_shapes(m, k)
    px, w1, w2 = m.arrays()
    val = _f_pq_nats(px, w1, w2, k.k1, k.k2, *q.arrays(), s.s1, s.s2)
    return val / LN2 if math.isfinite(val) else math.inf


def update_q(m: CeoSourceModel, k: EncoderKernels) -> CeoAuxiliaries:
    """Auxiliaries minimizing F_s(P, .) for fixed P: the P-induced laws."""
    _check_shapes(m, k)
    return CeoAuxiliaries.from_arrays(*_q_from(_induce(*m.arrays(), k.k1, k.k2)))


def rho(m: CeoSourceModel, k: EncoderKernels, q: CeoAuxiliaries, s, i: int) -> np.ndarray:
    """Exponent table of the kernel update for encoder ``i``, shape (|Y_i|, |U_i|).

    Natural-log units. For ``i = 2`` the u2 marginal entering the last term
    is taken from ``k`` (the previous iterate). Adding any function of y_i
    to the table leaves the resulting kernel unchanged.
    """
    s = _as_tradeoff(s)
    _check_shapes(m, k)
    px, w1, w2 = m.arrays()
    qx, qu, qu2 = q.arrays()
    ind = _induce(px, w1, w2, k.k1, k.k2)
    _check_q(ind, qx, qu, qu2)
    if i == 1:
        return _rho_first(_posterior_x_given_y(px, w1), ind.pu2x, qx, qu, s.s1)
    if i == 2:
        return _rho_second(
            _posterior_x_given_y(px, w2), ind.pu1x, ind.pu2, qx, qu, qu2, s.s1, s.s2
        )
    raise SolverInputError("encoder index must be 1 or 2")


def update_p(
    m: CeoSourceModel,
    k_prev: EncoderKernels,
    q: CeoAuxiliaries,
    s,
    order: str = "u1-first",
) -> EncoderKernels:
    """One kernel sweep for fixed Q.

    The first-updated block is the exact softmax minimizer; the u2 block
    uses the previous u2 marginal inside its exponent and is safeguarded by
    backtracking so F_s(., Q) never increases.
    """
    s = _as_tradeoff(s)
    _check_shapes(m, k_prev)
    px, w1, w2 = m.arrays()
    qx, qu, qu2 = q.arrays()
    _check_q(_induce(px, w1, w2, k_prev.k1, k_prev.k2), qx, qu, qu2)
    k1, k2 = _update_p_arrays(px, w1, w2, k_prev.k1, k_prev.k2, qx, qu, qu2, s.s1, s.s2, order)
    return EncoderKernels.from_arrays(k1, k2)


def _run_once(px, w1, w2, k1, k2, s1, s2, opts: SolverOptions):
    qx, qu, qu2 = _q_from(_induce(px, w1, w2, k1, k2))
    f = _f_pq_nats(px, w1, w2, k1, k2, qx, qu, qu2, s1, s2)
    trace = [f / LN2]
    converged = False
    it = 0
    for it in range(1, opts.max_iters + 1):
        k1, k2 = _update_p_arrays(
            px, w1, w2, k1, k2, qx, qu, qu2, s1, s2, opts.order, opts.max_backtracks
        )
        ind = _induce(px, w1, w2, k1, k2)
        qx, qu, qu2 = _q_from(ind)
        f_new = _f_pq_nats(px, w1, w2, k1, k2, qx, qu, qu2, s1, s2, ind)
        trace.append(f_new / LN2)
        if is_converged(f, f_new, opts.tol):
            converged = True
            break
        f = f_new
    return k1, k2, trace, it, converged


def _solve_region1(m: CeoSourceModel, s1: float, s2: float, opts: SolverOptions):
    px, w1, w2 = m.arrays()
    _, n1, n2 = m.sizes
    u1, u2 = opts.u_sizes or (n1, n2)
    if u1 > n1 or u2 > n2:
        raise SolverInputError(f"u_sizes {opts.u_sizes} exceed |Y| = ({n1}, {n2})")
    best = None
    for rng in restart_rngs(opts.rng_seed, opts.restarts):
        k1 = initial_kernel(rng, n1, u1, opts.init)
        k2 = initial_kernel(rng, n2, u2, opts.init)
        run = _run_once(px, w1, w2, k1, k2, s1, s2, opts)
        if best is None or run[2][-1] < best[2][-1]:
            best = run
    return best


def solve(m: CeoSourceModel, s, opts: SolverOptions | None = None) -> CeoSolveReport:
    """Best-of-restarts alternating minimization for one trade-off point.

    Region 2 is computed as region 1 of the channel-swapped model with the
    weights swapped; kernels and rates are mapped back to the original
    encoder labels, so R1 = I(Y1;U1) and R2 = I(Y2;U2|U1) there.
    """
    s = _as_tradeoff(s)
    opts = opts or SolverOptions()
    if s.region_index == 1:
        model, w = m, (s.s1, s.s2)
    else:
        model, w = m.swapped(), (s.s2, s.s1)
        if opts.u_sizes is not None:
            opts = _swap_u_sizes(opts)
    k1, k2, trace, iters, converged = _solve_region1(model, *w, opts)
    r1, r2, d = _tuple_bits(*model.arrays(), k1, k2)
    f = trace[-1]
    residual = abs(d - (-w[0] * r1 - w[1] * r2 + f))
    if residual > IDENTITY_TOL:
        log.warning("tuple identity residual %.3g at s=%s", residual, s)
    kernels = EncoderKernels.from_arrays(k1, k2)
    if s.region_index == 2:
        kernels = kernels.swapped()
        r1, r2 = r2, r1
    if not converged:
        log.info("CEO solve at %s stopped after %d iterations without converging", s, iters)
    return CeoSolveReport(
        tradeoff=s,
        kernels=kernels,
        tuple=(r1, r2, d),
        F=f,
        objective=tuple(trace),
        iterations=iters,
        converged=converged,
        restarts_used=opts.restarts,
        identity_residual=residual,
    )


def _swap_u_sizes(opts: SolverOptions) -> SolverOptions:
    return replace(opts, u_sizes=(opts.u_sizes[1], opts.u_sizes[0]))
