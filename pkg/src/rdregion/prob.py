"""Finite-alphabet probability tables and information measures.

All information quantities are returned in bits. Tables are dense numpy
arrays; every container is immutable after construction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

NORM_TOL = 1e-12
RENORM_TOL = 1e-9
LN2 = math.log(2.0)


class InvalidDistribution(ValueError):
    """Raised when a table is not a probability distribution."""


class AxisError(ValueError):
    """Raised for unknown, duplicated or overlapping axis labels."""


def _check_mass(mass: np.ndarray, what: str) -> np.ndarray:
    if not np.all(np.isfinite(mass)):
        raise InvalidDistribution(f"{what}: non-finite entries")
    if np.any(mass < 0):
        if mass.min() < -RENORM_TOL:
            raise InvalidDistribution(f"{what}: negative entry {mass.min():.3g}")
        mass = np.clip(mass, 0.0, None)
    return mass


def _normalize_total(mass: np.ndarray, what: str) -> np.ndarray:
    mass = _check_mass(np.asarray(mass, dtype=float), what)
    total = mass.sum()
    err = abs(total - 1.0)
    if err > RENORM_TOL:
        raise InvalidDistribution(f"{what}: total mass {total!r} is not 1")
    if err > 0:
        mass = mass / total
    return mass


def xlogx(p: np.ndarray) -> np.ndarray:
    """Elementwise p*log2(p) with 0*log 0 = 0."""
    p = np.asarray(p, dtype=float)
    out = np.zeros_like(p)
    pos = p > 0
    out[pos] = p[pos] * np.log2(p[pos])
    return out


def entropy_bits(mass: np.ndarray) -> float:
    """Entropy in bits of an (already valid) array of probabilities."""
    return float(-xlogx(mass).sum())


@dataclass(frozen=True)
class Pmf:
    mass: np.ndarray

    def __post_init__(self):
        mass = np.array(self.mass, dtype=float).reshape(-1)
        if mass.size == 0:
            raise InvalidDistribution("Pmf: empty support")
        mass = _normalize_total(mass, "Pmf")
        mass.setflags(write=False)
        object.__setattr__(self, "mass", mass)

    @property
    def support_size(self) -> int:
        return self.mass.size

    @classmethod
    def uniform(cls, n: int) -> "Pmf":
        return cls(np.full(n, 1.0 / n))

    @classmethod
    def bernoulli(cls, p: float) -> "Pmf":
        """Pmf of a Bern(p) variable, ordered (P[0], P[1])."""
        return cls([1.0 - p, p])


@dataclass(frozen=True)
class JointPmf:
    """Dense joint table; ``axes[k]`` labels dimension ``k`` of ``mass``."""

    axes: tuple[str, ...]
    mass: np.ndarray

    def __post_init__(self):
        axes = tuple(self.axes)
        mass = np.array(self.mass, dtype=float)
        if len(set(axes)) != len(axes):
            raise AxisError(f"duplicate axis labels in {axes}")
        if mass.ndim != len(axes):
            raise AxisError(f"{len(axes)} labels for a {mass.ndim}-d table")
        if mass.size == 0:
            raise InvalidDistribution("JointPmf: empty table")
        mass = _normalize_total(mass, "JointPmf")
        mass.setflags(write=False)
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "mass", mass)

    @property
    def shape(self) -> dict[str, int]:
        return dict(zip(self.axes, self.mass.shape))

    def axis_index(self, labels: Iterable[str]) -> tuple[int, ...]:
        labels = tuple(labels)
        missing = [a for a in labels if a not in self.axes]
        if missing:
            raise AxisError(f"unknown axes {missing}; table has {self.axes}")
        if len(set(labels)) != len(labels):
            raise AxisError(f"duplicate axes in {labels}")
        return tuple(self.axes.index(a) for a in labels)

    def to_pmf(self) -> Pmf:
        return Pmf(self.mass.reshape(-1))


@dataclass(frozen=True)
class CondPmf:
    """Conditional law of ``target_axes`` given ``given_axes``.

    ``rows`` has one row per joint value of the conditioning variables (in
    C order) and one column per joint value of the targets. Rows whose
    conditioning event had zero mass are uniform and marked in ``zero_mass``.
    """

    rows: np.ndarray
    given_axes: tuple[str, ...] = ("G",)
    target_axes: tuple[str, ...] = ("T",)
    given_shape: tuple[int, ...] | None = None
    target_shape: tuple[int, ...] | None = None
    zero_mass: np.ndarray | None = field(default=None)

    def __post_init__(self):
        rows = np.array(self.rows, dtype=float)
        if rows.ndim != 2 or rows.size == 0:
            raise InvalidDistribution("CondPmf: rows must be a nonempty 2-d table")
        rows = _check_mass(rows, "CondPmf")
        sums = rows.sum(axis=1)
        bad = np.abs(sums - 1.0) > RENORM_TOL
        if np.any(bad):
            raise InvalidDistribution(
                f"CondPmf: row {int(np.argmax(bad))} sums to {sums[bad][0]!r}"
            )
        rows = rows / sums[:, None]
        gs = tuple(self.given_shape) if self.given_shape is not None else (rows.shape[0],)
        ts = tuple(self.target_shape) if self.target_shape is not None else (rows.shape[1],)
        if math.prod(gs) != rows.shape[0] or math.prod(ts) != rows.shape[1]:
            raise AxisError("CondPmf: shapes do not match the row table")
        zm = (
            np.zeros(rows.shape[0], dtype=bool)
            if self.zero_mass is None
            else np.array(self.zero_mass, dtype=bool).reshape(-1)
        )
        for arr in (rows, zm):
            arr.setflags(write=False)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "given_shape", gs)
        object.__setattr__(self, "target_shape", ts)
        object.__setattr__(self, "zero_mass", zm)
        object.__setattr__(self, "given_axes", tuple(self.given_axes))
        object.__setattr__(self, "target_axes", tuple(self.target_axes))

    @property
    def given_size(self) -> int:
        return self.rows.shape[0]

    @property
    def out_size(self) -> int:
        return self.rows.shape[1]

    @property
    def table(self) -> np.ndarray:
        """Rows reshaped to ``given_shape + target_shape``."""
        return self.rows.reshape(self.given_shape + self.target_shape)

    def row(self, *given) -> Pmf:
        idx = np.ravel_multi_index(given, self.given_shape)
        return Pmf(self.rows[idx])


def _disjoint(*sets: Sequence[str]) -> None:
    seen: set[str] = set()
    for s in sets:
        overlap = seen.intersection(s)
        if overlap:
            raise AxisError(f"axis sets overlap on {sorted(overlap)}")
        seen.update(s)


def marginalize(j: JointPmf, keep_axes: Iterable[str]) -> JointPmf:
    """Sum out every axis not in ``keep_axes``; kept axes retain their order in ``j``."""
    keep = tuple(keep_axes)
    if not keep:
        raise AxisError("keep_axes must be nonempty")
    j.axis_index(keep)
    ordered = tuple(a for a in j.axes if a in keep)
    drop = tuple(i for i, a in enumerate(j.axes) if a not in keep)
    return JointPmf(ordered, j.mass.sum(axis=drop) if drop else j.mass)


def _arranged(j: JointPmf, axes: Sequence[str]) -> np.ndarray:
    """Marginal over ``axes``, transposed into exactly that order."""
    m = marginalize(j, axes)
    return np.transpose(m.mass, [m.axes.index(a) for a in axes])


def condition(j: JointPmf, target_axes: Iterable[str], given_axes: Iterable[str]) -> CondPmf:
    target, given = tuple(target_axes), tuple(given_axes)
    if not target or not given:
        raise AxisError("target and given axes must be nonempty")
    _disjoint(target, given)
    j.axis_index(target + given)
    tab = _arranged(j, given + target)
    gshape, tshape = tab.shape[: len(given)], tab.shape[len(given):]
    flat = tab.reshape(math.prod(gshape), math.prod(tshape))
    tot = flat.sum(axis=1)
    zero = tot <= 0
    rows = np.empty_like(flat)
    rows[~zero] = flat[~zero] / tot[~zero, None]
    rows[zero] = 1.0 / flat.shape[1]
    return CondPmf(rows, given, target, gshape, tshape, zero)


def entropy(p: Pmf | JointPmf) -> float:
    """Shannon entropy in bits."""
    return entropy_bits(p.mass)


def joint_entropy(j: JointPmf, axes: Iterable[str]) -> float:
    axes = tuple(axes)
    if not axes:
        return 0.0
    return entropy_bits(marginalize(j, axes).mass)


def conditional_entropy(j: JointPmf, target_axes: Iterable[str], given_axes: Iterable[str] = ()) -> float:
    """H(target | given) in bits; ``given`` may be empty."""
    target, given = tuple(target_axes), tuple(given_axes)
    # overlap is allowed: H(A|A) = 0
    both = tuple(dict.fromkeys(target + given))
    j.axis_index(both)
    h = joint_entropy(j, both) - joint_entropy(j, given)
    return max(h, 0.0)


def mutual_information(
    j: JointPmf,
    a_axes: Iterable[str],
    b_axes: Iterable[str],
    cond_axes: Iterable[str] = (),
) -> float:
    """I(A;B|C) in bits, computed from four joint entropies."""
    a, b, c = tuple(a_axes), tuple(b_axes), tuple(cond_axes)
    if not a or not b:
        raise AxisError("a_axes and b_axes must be nonempty")
    _disjoint(a, b, c)
    j.axis_index(a + b + c)
    h = joint_entropy
    val = h(j, a + c) + h(j, b + c) - h(j, a + b + c) - h(j, c)
    return max(val, 0.0)


def kl_divergence(p: Pmf, q: Pmf) -> float:
    """KL(p||q) in bits; ``math.inf`` when p is not absolutely continuous wrt q."""
    if p.support_size != q.support_size:
        raise ValueError("kl_divergence: support sizes differ")
    return kl_bits(p.mass, q.mass)


def kl_bits(p: np.ndarray, q: np.ndarray) -> float:
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    pos = p > 0
    if np.any(q[pos] <= 0):
        return math.inf
    val = float(np.sum(p[pos] * (np.log2(p[pos]) - np.log2(q[pos]))))
    return max(val, 0.0)
