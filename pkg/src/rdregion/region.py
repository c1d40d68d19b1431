"""Parameter sweeps and assembly of the rate-distortion regions.

Each solve at weights w yields a tuple on the boundary and a supporting
halfspace ``<w, tuple> >= offset``. The region is represented primarily by
the family of those halfspaces; a lower convex envelope of the CEO point
cloud is kept alongside for plotting.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from . import bt, ceo
from .common import SolverOptions
from .prob import conditional_entropy

log = logging.getLogger(__name__)

HALFSPACE_TOL = 1e-6


class EmptyHullError(RuntimeError):
    """No converged solve was available to build a region from."""


def default_s_values() -> tuple[float, ...]:
    return tuple(float(v) for v in np.logspace(-3, 1, 30))


def default_alpha_values() -> tuple[float, ...]:
    return tuple(float(v) for v in np.linspace(0.0, 1.0, 11))


@dataclass(frozen=True)
class SweepGrid:
    s_values: tuple[float, ...] = field(default_factory=default_s_values)
    # False: diagonal s1 = s2; True: every (s1, s2) in s_values x s_values
    product: bool = False
    alpha_values: tuple[float, ...] = field(default_factory=default_alpha_values)
    restarts: int = 10
    seed: int = 0
    # sweeps stop tighter than a lone solve: near the zero-rate threshold a
    # 1e-9 relative stop leaves offsets a few 1e-9 above their limit
    solver: SolverOptions = field(default_factory=lambda: SolverOptions(tol=1e-12))
    threads: int = 1

    def __post_init__(self):
        s = tuple(float(v) for v in self.s_values)
        a = tuple(float(v) for v in self.alpha_values)
        if not s or min(s) <= 0:
            raise ValueError("s_values must be a nonempty list of positive numbers")
        if a and (min(a) < 0 or max(a) > 1):
            raise ValueError("alpha_values must lie in [0, 1]")
        if self.restarts < 1 or self.threads < 1:
            raise ValueError("restarts and threads must be positive")
        object.__setattr__(self, "s_values", s)
        object.__setattr__(self, "alpha_values", a)

    def pairs(self) -> list[tuple[float, float]]:
        if self.product:
            return [(a, b) for a in self.s_values for b in self.s_values]
        return [(v, v) for v in self.s_values]

    def options_for(self, task_index: int) -> SolverOptions:
        seed = int(np.random.SeedSequence([self.seed, task_index]).generate_state(1)[0])
        return replace(self.solver, restarts=self.restarts, rng_seed=seed)


@dataclass(frozen=True)
class RegionPoint:
    problem: str  # "ceo" or "bt"
    region: int
    s1: float
    s2: float
    alpha: float | None
    R1: float
    R2: float
    D1: float
    D2: float | None  # None for CEO, where D1 is the single distortion
    F: float
    iterations: int
    converged: bool
    kernels: ceo.EncoderKernels | None = field(default=None, repr=False, compare=False)

    @property
    def weighted_distortion(self) -> float:
        if self.alpha is None:
            return self.D1
        return self.alpha * self.D1 + (1.0 - self.alpha) * self.D2

    @property
    def offset(self) -> float:
        """Value of the supporting functional at this point's own weights."""
        return self.weighted_distortion + self.s1 * self.R1 + self.s2 * self.R2

    @property
    def tuple(self) -> tuple[float, ...]:
        if self.alpha is None:
            return (self.R1, self.R2, self.D1)
        return (self.R1, self.R2, self.D1, self.D2)


@dataclass(frozen=True)
class Halfspace:
    """``w_d . D + s1 R1 + s2 R2 >= offset`` with ``w_d = (alpha, 1 - alpha)`` or 1 for CEO."""

    s1: float
    s2: float
    alpha: float | None
    offset: float
    region: int  # region index whose solve supplied the offset; 0 for the floor

    def value(self, p: RegionPoint) -> float:
        if self.alpha is None:
            d = p.D1
        else:
            d = self.alpha * p.D1 + (1.0 - self.alpha) * p.D2
        return d + self.s1 * p.R1 + self.s2 * p.R2

    def satisfied_by(self, p: RegionPoint, tol: float = HALFSPACE_TOL) -> bool:
        return self.value(p) >= self.offset - tol


@dataclass(frozen=True)
class Facet:
    vertices: tuple[int, int, int]
    normal: tuple[float, float, float]
    offset: float  # normal . (R1, R2, D) + offset = 0 on the facet

    def height(self, r1: float, r2: float) -> float:
        a, b, c = self.normal
        return -(a * r1 + b * r2 + self.offset) / c


@dataclass(frozen=True)
class RegionHull:
    problem: str
    points: tuple[RegionPoint, ...]
    halfspaces: tuple[Halfspace, ...]
    # CEO: key None; BT: one envelope of the weighted distortion per alpha
    hull_facets: dict = field(default_factory=dict)

    @property
    def converged_points(self) -> list[RegionPoint]:
        return [p for p in self.points if p.converged]

    def violations(self, tol: float = HALFSPACE_TOL) -> list[tuple[RegionPoint, Halfspace, float]]:
        out = []
        for p in self.converged_points:
            for h in self.halfspaces:
                gap = h.value(p) - h.offset
                if gap < -tol:
                    out.append((p, h, gap))
        return out

    def envelope(self, r1: float, r2: float, alpha: float | None = None) -> float:
        """Lower convex envelope of the (weighted) distortion at (r1, r2)."""
        facets = self.hull_facets.get(alpha, [])
        if not facets:
            raise EmptyHullError("no envelope facets available")
        return max(f.height(r1, r2) for f in facets)


def _run_tasks(fn, tasks: Sequence, threads: int) -> list:
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            return list(ex.map(fn, tasks))
    return [fn(t) for t in tasks]


def _ceo_point(report: ceo.CeoSolveReport) -> RegionPoint:
    t = report.tradeoff
    r1, r2, d = report.tuple
    return RegionPoint("ceo", t.region_index, t.s1, t.s2, None, r1, r2, d, None,
                       report.F, report.iterations, report.converged, report.kernels)


def _bt_point(report: bt.BtSolveReport) -> RegionPoint:
    t = report.tradeoff
    r1, r2, d1, d2 = report.tuple
    return RegionPoint("bt", t.region_index, t.s1, t.s2, t.alpha, r1, r2, d1, d2,
                       report.F, report.iterations, report.converged, report.kernels)


def _supporting_halfspaces(points: Sequence[RegionPoint]) -> list[Halfspace]:
    """One halfspace per weight vector, using the smaller offset of the two regions.

    A region-i solve supports its own sub-region only; the union's supporting
    value at given weights is the minimum over the sub-regions.
    """
    best: dict[tuple, RegionPoint] = {}
    for p in points:
        if not p.converged:
            continue
        key = (p.s1, p.s2, p.alpha)
        if key not in best or p.offset < best[key].offset:
            best[key] = p
    return [Halfspace(p.s1, p.s2, p.alpha, p.offset, p.region) for p in best.values()]


def _lower_facets(xyz: np.ndarray) -> list[Facet]:
    if len(xyz) < 4:
        return []
    try:
        hull = ConvexHull(xyz)
    except QhullError:
        try:
            hull = ConvexHull(xyz, qhull_options="QJ")
        except QhullError:
            log.info("point cloud too degenerate for a 3-d hull")
            return []
    facets = []
    for simplex, eq in zip(hull.simplices, hull.equations):
        if eq[2] < -1e-12:
            facets.append(Facet(tuple(int(i) for i in simplex), tuple(float(v) for v in eq[:3]), float(eq[3])))
    return facets


def _require_converged(points: Sequence[RegionPoint]) -> None:
    if not any(p.converged for p in points):
        raise EmptyHullError("every solve in the sweep failed to converge")


def sweep_ceo(m: ceo.CeoSourceModel, grid: SweepGrid | None = None, include_floor: bool = True) -> RegionHull:
    """Solve both regions at every weight pair and assemble the CEO region.

    With ``include_floor`` the s -> 0 halfspace D >= H(X|Y1,Y2) is added.
    """
    grid = grid or SweepGrid()
    tasks = [
        (idx, ceo.CeoTradeoff(s1, s2, region))
        for idx, ((s1, s2), region) in enumerate((p, r) for p in grid.pairs() for r in (1, 2))
    ]

    def work(task):
        idx, tradeoff = task
        return ceo.solve(m, tradeoff, grid.options_for(idx))

    points = tuple(_ceo_point(r) for r in _run_tasks(work, tasks, grid.threads))
    _require_converged(points)
    halfspaces = _supporting_halfspaces(points)
    if include_floor:
        floor = conditional_entropy(m.joint(), ["X"], ["Y1", "Y2"])
        halfspaces.append(Halfspace(0.0, 0.0, None, floor, 0))
    index = [i for i, p in enumerate(points) if p.converged]
    facets = _lower_facets(np.array([points[i].tuple for i in index]))
    # facet vertices refer to the full point list
    facets = [replace(f, vertices=tuple(index[v] for v in f.vertices)) for f in facets]
    return RegionHull("ceo", points, tuple(halfspaces), {None: facets})


def sweep_bt(m: bt.BtSourceModel, grid: SweepGrid | None = None) -> RegionHull:
    """Solve both regions for every (s1, s2, alpha) and assemble the BT halfspace family."""
    grid = grid or SweepGrid()
    if not grid.alpha_values:
        raise ValueError("a BT sweep needs at least one alpha value")
    combos = [(a, p, r) for a in grid.alpha_values for p in grid.pairs() for r in (1, 2)]
    tasks = [(idx, bt.BtTradeoff(s1, s2, a, r)) for idx, (a, (s1, s2), r) in enumerate(combos)]

    def work(task):
        idx, beta = task
        return bt.solve_bt(m, beta, grid.options_for(idx))

    points = tuple(_bt_point(r) for r in _run_tasks(work, tasks, grid.threads))
    _require_converged(points)
    halfspaces = _supporting_halfspaces(points)
    facets = {}
    for a in grid.alpha_values:
        idx = [i for i, p in enumerate(points) if p.converged and p.alpha == a]
        xyz = np.array([(points[i].R1, points[i].R2, points[i].weighted_distortion) for i in idx])
        fs = _lower_facets(xyz) if len(idx) else []
        facets[a] = [replace(f, vertices=tuple(idx[v] for v in f.vertices)) for f in fs]
    return RegionHull("bt", points, tuple(halfspaces), facets)


def equal_rate_slice(hull: RegionHull, r_values: Sequence[float] | None = None) -> list[tuple[float, float]]:
    """Smallest D with (R, R, D) inside the CEO halfspace intersection, per R.

    The intersection also includes D >= 0.
    """
    if hull.problem != "ceo":
        raise ValueError("equal-rate slices are defined for CEO regions")
    if not hull.halfspaces:
        raise EmptyHullError("hull has no halfspaces")
    if r_values is None:
        r_top = max([2.5] + [max(p.R1, p.R2) for p in hull.converged_points])
        r_values = np.linspace(0.0, r_top, 101)
    slope = np.array([h.s1 + h.s2 for h in hull.halfspaces])
    offset = np.array([h.offset for h in hull.halfspaces])
    out = []
    for r in r_values:
        d = float(np.max(offset - slope * r))
        out.append((float(r), max(d, 0.0)))
    return out
