"""Pieces shared by the CEO and Berger-Tung alternating minimizers."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

log = logging.getLogger(__name__)

LOG_FLOOR = 1e-300
LN2 = math.log(2.0)
INIT_MODES = ("random-dirichlet", "perturbed-identity")
ORDERS = ("u1-first", "u2-first")


class DomainError(ArithmeticError):
    """An auxiliary law vanishes on a cell that carries positive mass."""


class SolverInputError(ValueError):
    pass


@dataclass(frozen=True)
class SolverOptions:
    max_iters: int = 5000
    tol: float = 1e-9
    restarts: int = 10
    rng_seed: int = 0
    init: str = "random-dirichlet"
    order: str = "u1-first"
    u_sizes: tuple[int, int] | None = None
    # halvings tried by the u2-block backtracking line search
    max_backtracks: int = 40

    def __post_init__(self):
        if self.max_iters < 1 or self.restarts < 1:
            raise SolverInputError("max_iters and restarts must be positive")
        if not self.tol > 0:
            raise SolverInputError("tol must be > 0")
        if self.init not in INIT_MODES:
            raise SolverInputError(f"init must be one of {INIT_MODES}")
        if self.order not in ORDERS:
            raise SolverInputError(f"order must be one of {ORDERS}")
        if self.u_sizes is not None:
            if len(self.u_sizes) != 2 or min(self.u_sizes) < 1:
                raise SolverInputError("u_sizes must be two positive integers")
            object.__setattr__(self, "u_sizes", tuple(int(u) for u in self.u_sizes))


def safe_log(a: np.ndarray) -> np.ndarray:
    """Natural log with arguments clamped below at LOG_FLOOR."""
    return np.log(np.maximum(a, LOG_FLOOR))


def check_cover(q: np.ndarray, p: np.ndarray, name: str) -> None:
    """Raise DomainError if ``q`` is zero somewhere ``p`` has mass."""
    bad = (q <= 0) & (p > 0)
    if np.any(bad):
        cell = tuple(int(i) for i in np.argwhere(bad)[0])
        raise DomainError(f"{name} vanishes at cell {cell} where the induced law has mass")


def cross_entropy_nats(p: np.ndarray, q: np.ndarray) -> float:
    """-sum p ln q with 0 ln q = 0; +inf if q = 0 where p > 0."""
    pos = p > 0
    if np.any(q[pos] <= 0):
        return math.inf
    return float(-np.sum(p[pos] * np.log(q[pos])))


def neg_entropy_nats(p: np.ndarray) -> float:
    """sum p ln p with 0 ln 0 = 0."""
    pos = p > 0
    return float(np.sum(p[pos] * np.log(p[pos])))


def softmax_rows(rho: np.ndarray) -> np.ndarray:
    """Row-wise exp(rho) / sum exp(rho), shifted by the row maximum."""
    rho = np.asarray(rho, dtype=float)
    m = rho.max(axis=1, keepdims=True)
    if not np.all(np.isfinite(m)):
        raise DomainError("softmax row has no finite entry")
    e = np.exp(rho - m)
    return e / e.sum(axis=1, keepdims=True)


def conditional_rows(joint2d: np.ndarray) -> np.ndarray:
    """Rows of a 2-d joint normalized to conditionals; zero rows become uniform."""
    tot = joint2d.sum(axis=1, keepdims=True)
    out = np.full_like(joint2d, 1.0 / joint2d.shape[1])
    nz = tot[:, 0] > 0
    out[nz] = joint2d[nz] / tot[nz]
    return out


def initial_kernel(rng: np.random.Generator, n_y: int, n_u: int, mode: str) -> np.ndarray:
    if mode == "random-dirichlet":
        return rng.dirichlet(np.ones(n_u), size=n_y)
    k = np.zeros((n_y, n_u))
    k[np.arange(n_y), np.arange(n_y) % n_u] = 1.0
    k = 0.9 * k + 0.1 * rng.dirichlet(np.ones(n_u), size=n_y)
    return k / k.sum(axis=1, keepdims=True)


def backtrack_u2(
    objective: Callable[[np.ndarray], float],
    k_old: np.ndarray,
    k_cand: np.ndarray,
    f_old: float,
    max_backtracks: int,
) -> tuple[np.ndarray, float]:
    """Step from ``k_old`` toward ``k_cand`` without increasing ``objective``.

    The candidate comes from a softmax that freezes the u2 marginal at the
    previous iterate, so it is not an exact block minimizer; the segment
    toward it is however a descent direction, so halving the step
    eventually decreases the objective unless ``k_old`` is stationary.
    """
    t = 1.0
    for _ in range(max_backtracks + 1):
        k_t = k_cand if t == 1.0 else (1.0 - t) * k_old + t * k_cand
        f_t = objective(k_t)
        if f_t <= f_old:
            return k_t, f_t
        t *= 0.5
    return k_old, f_old


def is_converged(f_prev: float, f_new: float, tol: float) -> bool:
    return abs(f_prev - f_new) / max(abs(f_new), 1.0) < tol


def restart_rngs(seed: int, restarts: int) -> list[np.random.Generator]:
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(restarts)]
