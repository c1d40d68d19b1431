"""Run configuration: a TOML file describing the source, the sweep and the outputs.

Example::

    problem = "ceo"
    seed = 0

    [source]
    kind = "bern-bsc"       # or "tables"; for problem = "bt": "dsbs" or "tables"
    p = 0.5
    alpha1 = 0.25
    alpha2 = 0.25

    [grid]
    s_min = 0.001
    s_max = 10.0
    s_count = 30            # or an explicit list: s_values = [...]
    product = false
    restarts = 10

    [output]
    equal_rate = true

See README.md for every key.
"""
from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .bt import BtSourceModel
from .ceo import CeoSourceModel
from .common import INIT_MODES, ORDERS, SolverOptions
from .region import SweepGrid, default_alpha_values, default_s_values

FORMATS = ("csv", "json", "both")
DEFAULT_ORACLE_S = ((0.05, 0.05), (0.5, 0.5), (2.0, 2.0), (0.5, 2.0))

_TOP_KEYS = {"problem", "seed", "threads", "format", "source", "grid", "solver", "output", "oracle"}
_SOURCE_KEYS = {
    "ceo": {"bern-bsc": {"p", "alpha1", "alpha2"}, "tables": {"px", "py1_given_x", "py2_given_x"}},
    "bt": {"dsbs": {"p"}, "tables": {"py1y2"}},
}
_GRID_KEYS = {"s_values", "s_min", "s_max", "s_count", "product", "alpha_values", "restarts"}
_SOLVER_KEYS = {"max_iters", "tol", "init", "order", "u_sizes"}
_OUTPUT_KEYS = {"dir", "equal_rate", "r_max", "r_count", "plot_script"}
_ORACLE_KEYS = {"enabled", "step", "s_pairs", "alpha"}


class ConfigError(ValueError):
    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass(frozen=True)
class OracleConfig:
    enabled: bool = False
    step: float = 0.02
    s_pairs: tuple[tuple[float, float], ...] = DEFAULT_ORACLE_S
    alpha: float = 0.5


@dataclass(frozen=True)
class RunConfig:
    problem: str
    source: CeoSourceModel | BtSourceModel
    source_spec: dict
    grid: SweepGrid
    out_dir: Path = Path("out")
    fmt: str = "both"
    equal_rate: bool = True
    r_max: float | None = None
    r_count: int = 101
    plot_script: bool = True
    oracle: OracleConfig = field(default_factory=OracleConfig)
    seed: int = 0
    threads: int = 1


def _unknown(section: str, got: dict, allowed: set) -> None:
    extra = sorted(set(got) - allowed)
    if extra:
        raise ConfigError(f"{section}.{extra[0]}" if section else extra[0], "unknown key")


def _name(path: str, key: str) -> str:
    return f"{path}.{key}" if path else key


def _num(d: dict, key: str, path: str, default=None, lo=None, hi=None, integer=False):
    name = _name(path, key)
    if key not in d:
        if default is None:
            raise ConfigError(name, "missing required value")
        return default
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(name, f"expected a number, got {v!r}")
    if not math.isfinite(v):
        raise ConfigError(name, "must be finite")
    if integer and not float(v).is_integer():
        raise ConfigError(name, f"expected an integer, got {v!r}")
    if lo is not None and v < lo or hi is not None and v > hi:
        raise ConfigError(name, f"{v!r} outside [{lo}, {hi}]")
    return int(v) if integer else float(v)


def _bool(d: dict, key: str, path: str, default: bool) -> bool:
    v = d.get(key, default)
    if not isinstance(v, bool):
        raise ConfigError(_name(path, key), f"expected true/false, got {v!r}")
    return v


def _table(d: dict, key: str, path: str, ndim: int) -> np.ndarray:
    if key not in d:
        raise ConfigError(f"{path}.{key}", "missing required table")
    try:
        arr = np.array(d[key], dtype=float)
    except (TypeError, ValueError):
        raise ConfigError(f"{path}.{key}", "not a numeric table") from None
    if arr.ndim != ndim or arr.size == 0:
        raise ConfigError(f"{path}.{key}", f"expected a {ndim}-d table")
    if np.any(~np.isfinite(arr)) or np.any(arr < 0) or np.any(arr > 1):
        raise ConfigError(f"{path}.{key}", "entries must be probabilities in [0, 1]")
    return arr


def _rows_normalized(arr: np.ndarray, path: str) -> None:
    sums = arr.sum(axis=-1) if arr.ndim > 1 else np.array([arr.sum()])
    bad = np.abs(sums - 1.0) > 1e-9
    if np.any(bad):
        raise ConfigError(path, f"row {int(np.argmax(bad))} sums to {sums[bad][0]!r}, not 1")


def _source(problem: str, src: Any):
    if not isinstance(src, dict):
        raise ConfigError("source", "missing [source] table")
    kind = src.get("kind")
    forms = _SOURCE_KEYS[problem]
    if kind not in forms:
        raise ConfigError("source.kind", f"must be one of {sorted(forms)} for problem {problem!r}")
    _unknown("source", src, forms[kind] | {"kind"})
    if problem == "ceo" and kind == "bern-bsc":
        p = _num(src, "p", "source", 0.5, 0.0, 1.0)
        a1 = _num(src, "alpha1", "source", None, 0.0, 1.0)
        a2 = _num(src, "alpha2", "source", None, 0.0, 1.0)
        return CeoSourceModel.bern_bsc(p, a1, a2), {"kind": kind, "p": p, "alpha1": a1, "alpha2": a2}
    if problem == "ceo":
        px = _table(src, "px", "source", 1)
        w1 = _table(src, "py1_given_x", "source", 2)
        w2 = _table(src, "py2_given_x", "source", 2)
        _rows_normalized(px, "source.px")
        _rows_normalized(w1, "source.py1_given_x")
        _rows_normalized(w2, "source.py2_given_x")
        for name, w in (("py1_given_x", w1), ("py2_given_x", w2)):
            if w.shape[0] != px.size:
                raise ConfigError(f"source.{name}", f"needs {px.size} rows, one per source symbol")
        spec = {"kind": kind, "px": px.tolist(), "py1_given_x": w1.tolist(), "py2_given_x": w2.tolist()}
        return CeoSourceModel.from_arrays(px, w1, w2), spec
    if kind == "dsbs":
        p = _num(src, "p", "source", None, 0.0, 1.0)
        return BtSourceModel.dsbs(p), {"kind": kind, "p": p}
    pyy = _table(src, "py1y2", "source", 2)
    if abs(pyy.sum() - 1.0) > 1e-9:
        raise ConfigError("source.py1y2", f"total mass {pyy.sum()!r} is not 1")
    return BtSourceModel.from_array(pyy), {"kind": kind, "py1y2": pyy.tolist()}


def _float_list(v: Any, path: str, lo: float, hi: float, open_lo: bool) -> tuple[float, ...]:
    if not isinstance(v, list) or not v:
        raise ConfigError(path, "expected a nonempty list of numbers")
    out = []
    for i, x in enumerate(v):
        if isinstance(x, bool) or not isinstance(x, (int, float)) or not math.isfinite(x):
            raise ConfigError(f"{path}[{i}]", f"expected a number, got {x!r}")
        if (x <= lo if open_lo else x < lo) or x > hi:
            raise ConfigError(f"{path}[{i}]", f"{x!r} out of range")
        out.append(float(x))
    return tuple(out)


def _grid(g: dict, problem: str, seed: int, threads: int, solver: SolverOptions) -> SweepGrid:
    _unknown("grid", g, _GRID_KEYS)
    if "s_values" in g:
        if {"s_min", "s_max", "s_count"} & set(g):
            raise ConfigError("grid.s_values", "give either s_values or s_min/s_max/s_count")
        s_values = _float_list(g["s_values"], "grid.s_values", 0.0, math.inf, True)
    elif {"s_min", "s_max", "s_count"} & set(g):
        lo = _num(g, "s_min", "grid", 1e-3, 0.0)
        hi = _num(g, "s_max", "grid", 10.0, 0.0)
        n = _num(g, "s_count", "grid", 30, 1, integer=True)
        if lo <= 0 or hi < lo:
            raise ConfigError("grid.s_min", "need 0 < s_min <= s_max")
        s_values = tuple(float(v) for v in np.logspace(math.log10(lo), math.log10(hi), n))
    else:
        s_values = default_s_values()
    alphas = (
        _float_list(g["alpha_values"], "grid.alpha_values", 0.0, 1.0, False)
        if "alpha_values" in g
        else default_alpha_values()
    )
    if problem == "ceo" and "alpha_values" in g:
        raise ConfigError("grid.alpha_values", "only meaningful for problem = 'bt'")
    return SweepGrid(
        s_values=s_values,
        product=_bool(g, "product", "grid", False),
        alpha_values=alphas if problem == "bt" else (),
        restarts=_num(g, "restarts", "grid", 10, 1, integer=True),
        seed=seed,
        solver=solver,
        threads=threads,
    )


def _solver(d: dict) -> SolverOptions:
    _unknown("solver", d, _SOLVER_KEYS)
    init = d.get("init", "random-dirichlet")
    if init not in INIT_MODES:
        raise ConfigError("solver.init", f"must be one of {INIT_MODES}")
    order = d.get("order", "u1-first")
    if order not in ORDERS:
        raise ConfigError("solver.order", f"must be one of {ORDERS}")
    u_sizes = d.get("u_sizes")
    if u_sizes is not None:
        if (
            not isinstance(u_sizes, list)
            or len(u_sizes) != 2
            or not all(isinstance(u, int) and not isinstance(u, bool) and u >= 1 for u in u_sizes)
        ):
            raise ConfigError("solver.u_sizes", "expected two positive integers")
        u_sizes = tuple(u_sizes)
    tol = _num(d, "tol", "solver", 1e-12, 0.0)
    if tol <= 0:
        raise ConfigError("solver.tol", "must be > 0")
    return SolverOptions(
        max_iters=_num(d, "max_iters", "solver", 5000, 1, integer=True),
        tol=tol,
        init=init,
        order=order,
        u_sizes=u_sizes,
    )


def _oracle(d: dict) -> OracleConfig:
    _unknown("oracle", d, _ORACLE_KEYS)
    pairs = DEFAULT_ORACLE_S
    if "s_pairs" in d:
        raw = d["s_pairs"]
        if not isinstance(raw, list) or not raw:
            raise ConfigError("oracle.s_pairs", "expected a list of [s1, s2] pairs")
        pairs = tuple(
            _float_list(p, f"oracle.s_pairs[{i}]", 0.0, math.inf, True) for i, p in enumerate(raw)
        )
        if any(len(p) != 2 for p in pairs):
            raise ConfigError("oracle.s_pairs", "each entry must be [s1, s2]")
    step = _num(d, "step", "oracle", 0.02, 0.0, 1.0)
    n = 1.0 / step if step > 0 else 0
    if step <= 0 or abs(n - round(n)) > 1e-9:
        raise ConfigError("oracle.step", "must divide 1")
    return OracleConfig(
        enabled=_bool(d, "enabled", "oracle", False),
        step=step,
        s_pairs=pairs,
        alpha=_num(d, "alpha", "oracle", 0.5, 0.0, 1.0),
    )


def parse_config(raw: dict) -> RunConfig:
    """Validate a decoded TOML document; raises ConfigError naming the offending field."""
    _unknown("", raw, _TOP_KEYS)
    problem = raw.get("problem")
    if problem not in ("ceo", "bt"):
        raise ConfigError("problem", "must be 'ceo' or 'bt'")
    seed = _num(raw, "seed", "", 0, 0, integer=True)
    threads = _num(raw, "threads", "", 1, 1, integer=True)
    fmt = raw.get("format", "both")
    if fmt not in FORMATS:
        raise ConfigError("format", f"must be one of {FORMATS}")
    for sec in ("grid", "solver", "output", "oracle"):
        if sec in raw and not isinstance(raw[sec], dict):
            raise ConfigError(sec, "expected a table")
    model, spec = _source(problem, raw.get("source"))
    solver = _solver(raw.get("solver", {}))
    grid = _grid(raw.get("grid", {}), problem, seed, threads, solver)
    out = raw.get("output", {})
    _unknown("output", out, _OUTPUT_KEYS)
    out_dir = out.get("dir", "out")
    if not isinstance(out_dir, str) or not out_dir:
        raise ConfigError("output.dir", "expected a path string")
    equal_rate = _bool(out, "equal_rate", "output", problem == "ceo")
    if equal_rate and problem != "ceo":
        raise ConfigError("output.equal_rate", "equal-rate slices exist for problem = 'ceo' only")
    r_max = _num(out, "r_max", "output", None, 0.0) if "r_max" in out else None
    return RunConfig(
        problem=problem,
        source=model,
        source_spec=spec,
        grid=grid,
        out_dir=Path(out_dir),
        fmt=fmt,
        equal_rate=equal_rate,
        r_max=r_max,
        r_count=_num(out, "r_count", "output", 101, 2, integer=True),
        plot_script=_bool(out, "plot_script", "output", True),
        oracle=_oracle(raw.get("oracle", {})),
        seed=seed,
        threads=threads,
    )


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    with open(path, "rb") as fh:
        try:
            raw = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError("<file>", f"not valid TOML: {exc}") from None
    return parse_config(raw)
