"""Exhaustive grid search over binary encoder kernels.

Each binary kernel p(u|y) is fixed by (p(u=0|y=0), p(u=0|y=1)), so a pair
of kernels is a point of [0, 1]^4. The objective is evaluated in its
Q-free form at every point of the grid {0, step, ..., 1}^4. This module
shares no code with the alternating solvers beyond the model containers.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .bt import BtSourceModel, BtTradeoff, _as_bt_tradeoff
from .ceo import CeoSourceModel, EncoderKernels, _as_tradeoff


class OracleBudgetError(RuntimeError):
    pass


@dataclass(frozen=True)
class GridSpec:
    step: float = 0.02
    max_cells: int = 10_000_000
    # rows of the (a, b) grid handled per work chunk
    chunk: int = 64

    def __post_init__(self):
        if not 0 < self.step <= 1:
            raise ValueError("step must lie in (0, 1]")
        n = 1.0 / self.step
        if abs(n - round(n)) > 1e-9:
            raise ValueError(f"step {self.step} does not divide 1")
        if self.max_cells < 1:
            raise ValueError("max_cells must be positive")

    @property
    def points(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, int(round(1.0 / self.step)) + 1)


def _plogp(a: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(a > 0, a * np.log2(np.where(a > 0, a, 1.0)), 0.0)


def _binary_kernels(points: np.ndarray) -> np.ndarray:
    """All binary kernels on the grid, shape (n*n, 2, 2), lexicographic in (a, b)."""
    a, b = np.meshgrid(points, points, indexing="ij")
    a, b = a.ravel(), b.ravel()
    return np.stack([np.stack([a, 1 - a], -1), np.stack([b, 1 - b], -1)], axis=1)


def _kernel_info(kernels: np.ndarray, py: np.ndarray) -> np.ndarray:
    """I(Y;U) in bits for each kernel in the batch."""
    pu = np.einsum("y,kyu->ku", py, kernels)
    h_u = -_plogp(pu).sum(-1)
    h_u_y = -np.einsum("y,kyu->k", py, _plogp(kernels))
    return h_u - h_u_y


def _budget(spec: GridSpec) -> int:
    n = len(spec.points)
    cells = n**4
    if cells > spec.max_cells:
        raise OracleBudgetError(
            f"grid step {spec.step} needs {cells} evaluations; budget is {spec.max_cells}"
        )
    return cells


def _reduce(chunks) -> tuple[float, int]:
    best_val, best_idx = math.inf, -1
    for val, idx in chunks:
        # chunks arrive in grid order; strict < keeps the lexicographically first
        if val < best_val:
            best_val, best_idx = val, idx
    return best_val, best_idx


def _search(eval_chunk, n_pairs: int, spec: GridSpec, threads: int):
    starts = range(0, n_pairs, spec.chunk)
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            results = list(ex.map(eval_chunk, starts))
    else:
        results = [eval_chunk(i) for i in starts]
    return _reduce(results)


def _kernels_at(flat_idx: int, kernels: np.ndarray) -> EncoderKernels:
    n_pairs = kernels.shape[0]
    i, j = divmod(flat_idx, n_pairs)
    return EncoderKernels.from_arrays(kernels[i], kernels[j])


def grid_min_ceo(
    m: CeoSourceModel, s, spec: GridSpec | None = None, threads: int = 1
) -> tuple[float, EncoderKernels]:
    """Minimum of H(X|U1,U2) + s1 I(Y1;U1|U2) + s2 I(Y2;U2) over the kernel grid."""
    spec = spec or GridSpec()
    s = _as_tradeoff(s)
    nx, n1, n2 = m.sizes
    if (n1, n2) != (2, 2):
        raise ValueError("the grid oracle handles binary observations only")
    _budget(spec)
    if s.region_index == 2:
        f, k = grid_min_ceo(m.swapped(), (s.s2, s.s1), spec, threads)
        return f, k.swapped()
    px, w1, w2 = m.arrays()
    kernels = _binary_kernels(spec.points)
    n_pairs = kernels.shape[0]
    pu1x = np.einsum("xy,kyu->kxu", w1, kernels)  # (K, X, U1)
    pu2x = np.einsum("xy,kyu->kxu", w2, kernels)
    info1 = _kernel_info(kernels, px @ w1)
    info2 = _kernel_info(kernels, px @ w2)
    h_u1 = -_plogp(np.einsum("x,kxu->ku", px, pu1x)).sum(-1)
    h_u2 = -_plogp(np.einsum("x,kxu->ku", px, pu2x)).sum(-1)

    def eval_chunk(start):
        sl = slice(start, min(start + spec.chunk, n_pairs))
        joint = np.einsum("x,ixa,jxb->ijabx", px, pu1x[sl], pu2x)
        puu = joint.sum(-1)
        h_joint = -_plogp(joint).sum(axis=(2, 3, 4))
        h_uu = -_plogp(puu).sum(axis=(2, 3))
        i_u1u2 = h_u1[sl, None] + h_u2[None, :] - h_uu
        f = (h_joint - h_uu) + s.s1 * (info1[sl, None] - i_u1u2) + s.s2 * info2[None, :]
        flat = int(np.argmin(f))
        return float(f.ravel()[flat]), start * n_pairs + flat

    best, idx = _search(eval_chunk, n_pairs, spec, threads)
    return best, _kernels_at(idx, kernels)


def grid_min_bt(
    m: BtSourceModel, beta, spec: GridSpec | None = None, threads: int = 1
) -> tuple[float, EncoderKernels]:
    """Minimum of a H(Y1|U) + (1-a) H(Y2|U) + s1 I(Y1;U1|U2) + s2 I(Y2;U2) over the grid."""
    spec = spec or GridSpec()
    beta = _as_bt_tradeoff(beta)
    n1, n2 = m.sizes
    if (n1, n2) != (2, 2):
        raise ValueError("the grid oracle handles binary sources only")
    _budget(spec)
    if beta.region_index == 2:
        f, k = grid_min_bt(
            m.swapped(), BtTradeoff(beta.s2, beta.s1, 1.0 - beta.alpha), spec, threads
        )
        return f, k.swapped()
    pyy = m.table
    a, abar = beta.alpha, 1.0 - beta.alpha
    kernels = _binary_kernels(spec.points)
    n_pairs = kernels.shape[0]
    py1, py2 = pyy.sum(1), pyy.sum(0)
    info1 = _kernel_info(kernels, py1)
    info2 = _kernel_info(kernels, py2)
    h_u1 = -_plogp(np.einsum("y,kyu->ku", py1, kernels)).sum(-1)
    h_u2 = -_plogp(np.einsum("y,kyu->ku", py2, kernels)).sum(-1)

    def eval_chunk(start):
        sl = slice(start, min(start + spec.chunk, n_pairs))
        # joint[i, j, u1, u2, y1, y2]
        joint = np.einsum("cd,ica,jdb->ijabcd", pyy, kernels[sl], kernels)
        puu = joint.sum(axis=(4, 5))
        h_uu = -_plogp(puu).sum(axis=(2, 3))
        h_uuy1 = -_plogp(joint.sum(axis=5)).sum(axis=(2, 3, 4))
        h_uuy2 = -_plogp(joint.sum(axis=4)).sum(axis=(2, 3, 4))
        i_u1u2 = h_u1[sl, None] + h_u2[None, :] - h_uu
        f = (
            a * (h_uuy1 - h_uu)
            + abar * (h_uuy2 - h_uu)
            + beta.s1 * (info1[sl, None] - i_u1u2)
            + beta.s2 * info2[None, :]
        )
        flat = int(np.argmin(f))
        return float(f.ravel()[flat]), start * n_pairs + flat

    best, idx = _search(eval_chunk, n_pairs, spec, threads)
    return best, _kernels_at(idx, kernels)
