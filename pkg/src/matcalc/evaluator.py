"""Numeric evaluation, the central-difference oracle and gradient checks."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence, Union

import numpy as np

from . import ops
from .errors import MatcalcError, ShapeMismatch, UnboundVariable
from .expr import Expr, Shape, free_vars

_COMPONENT = re.compile(r"^(.+)_(\d+)$")

Variable = Union[str, Expr, Sequence[str]]


def lookup(name: str, shape: Shape, env: dict):
    """Fetch a variable's value, checking it against the declared shape.

    A scalar named ``x_3`` that is not bound itself resolves to the third
    (1-based) component of a bound vector ``x``.
    """
    if name in env:
        value = env[name]
        arr = np.asarray(value, dtype=np.float64)
        if shape.is_scalar:
            if arr.ndim != 0:
                raise ShapeMismatch(f"{name!r} is a scalar but is bound to a vector")
            return float(arr)
        if arr.ndim != 1 or arr.size != shape.length:
            raise ShapeMismatch(f"{name!r} is {shape} but is bound to shape {arr.shape}")
        return arr
    m = _COMPONENT.match(name)
    if shape.is_scalar and m and m.group(1) in env:
        vec = np.atleast_1d(np.asarray(env[m.group(1)], dtype=np.float64))
        idx = int(m.group(2))
        if 1 <= idx <= vec.size:
            return float(vec[idx - 1])
    raise UnboundVariable(f"variable {name!r} is not bound")


def _eval(e: Expr, env: dict, watch: list | None):
    k = e.kind
    if k == "var":
        return lookup(e.name, e.shape, env)
    if k == "const":
        return e.value
    if k == "constvec":
        return np.array(e.value)
    args = [_eval(c, env, watch) for c in e.children]
    if watch is not None and k in ("max0", "step"):
        watch.append(np.min(np.abs(args[0])))
    return ops.apply(k, args, e.value, e.shape.length)


def evaluate(e: Expr, env: dict):
    """Value of ``e``: a float for scalars, a 1-D array for vectors."""
    return _eval(e, env, None)


def eval_jacobian(j, env: dict) -> np.ndarray:
    """Evaluate every entry of a Jacobian into an m x n array."""
    grid = np.zeros((j.rows, j.cols))
    for (r, c), entry in j.nonzero_entries():
        try:
            grid[r, c] = evaluate(entry, env)
        except MatcalcError as exc:
            raise type(exc)(f"{exc} (Jacobian entry {r},{c})") from exc
    return grid


# -- finite differences -----------------------------------------------------

def _resolve_wrt(e, v: Variable) -> list[tuple[str, Shape]]:
    if isinstance(v, Expr):
        return [(v.name, v.shape)]
    if isinstance(v, str):
        v = [v]
    fv: dict[str, Shape] = {}
    for item in (e if isinstance(e, (list, tuple)) else [e]):
        fv.update(free_vars(item))
    return [(name, fv.get(name, Shape())) for name in v]


class FiniteDifference(NamedTuple):
    grid: np.ndarray
    near_kink: np.ndarray  # bool, same shape as grid
    steps: np.ndarray


def _flat_value(e, env, watch):
    if isinstance(e, (list, tuple)):
        return np.array([float(_eval(item, env, watch)) for item in e])
    return np.atleast_1d(np.asarray(_eval(e, env, watch), dtype=np.float64))


def _input_slots(env: dict, wrt: list[tuple[str, Shape]]):
    """(name, component index or None, current value) for each scalar input."""
    slots = []
    for name, shape in wrt:
        if shape.is_scalar:
            slots.append((name, None, lookup(name, shape, env)))
        else:
            vec = lookup(name, shape, env)
            slots.extend((name, i, float(vec[i])) for i in range(shape.length))
    return slots


def _with(env: dict, name: str, idx: int | None, value: float) -> dict:
    out = dict(env)
    if idx is None:
        out[name] = value
    else:
        vec = np.array(env[name], dtype=np.float64)
        vec[idx] = value
        out[name] = vec
    return out


def finite_diff(e, v: Variable, env: dict, h: float | None = None) -> FiniteDifference:
    """Central-difference estimate of the numerator-layout Jacobian.

    The default step for input j is ``1e-6 * max(1, |v_j|)``. Columns whose
    probes pass within ``10 h`` of a ``max0``/``step`` argument are flagged in
    ``near_kink``.
    """
    wrt = _resolve_wrt(e, v)
    slots = _input_slots(env, wrt)
    m = _flat_value(e, env, None).size
    grid = np.zeros((m, len(slots)))
    kink = np.zeros((m, len(slots)), dtype=bool)
    steps = np.zeros(len(slots))
    for j, (name, idx, x0) in enumerate(slots):
        step = h if h is not None else 1e-6 * max(1.0, abs(x0))
        if step <= 0:
            raise ValueError("finite-difference step must be positive")
        steps[j] = step
        watch: list = []
        _flat_value(e, env, watch)
        hi = _flat_value(e, _with(env, name, idx, x0 + step), watch)
        lo = _flat_value(e, _with(env, name, idx, x0 - step), watch)
        grid[:, j] = (hi - lo) / (2.0 * step)
        if watch and min(watch) <= 10.0 * step:
            kink[:, j] = True
    return FiniteDifference(grid, kink, steps)


# -- gradient check ---------------------------------------------------------

@dataclass
class CheckEntry:
    row: int
    col: int
    symbolic: float
    numeric: float
    abs_err: float
    rel_err: float
    skipped: bool = False


@dataclass
class CheckReport:
    entries: list[CheckEntry]
    tol_abs: float
    tol_rel: float
    skipped: list[tuple[int, int]] = field(default_factory=list)

    def _checked(self):
        return [en for en in self.entries if not en.skipped]

    @property
    def max_abs_err(self) -> float:
        return max((en.abs_err for en in self._checked()), default=0.0)

    @property
    def max_rel_err(self) -> float:
        return max((en.rel_err for en in self._checked()), default=0.0)

    @property
    def passed(self) -> bool:
        return all(en.abs_err <= self.tol_abs or en.rel_err <= self.tol_rel
                   for en in self._checked())

    @property
    def verdict(self) -> str:
        if not self.passed:
            return "fail"
        return "pass-with-skips" if self.skipped else "pass"

    def render(self) -> str:
        header = ("entry", "symbolic", "numeric", "abs err", "rel err", "")
        rows = []
        for en in self.entries:
            rows.append((f"({en.row},{en.col})", f"{en.symbolic:.12g}", f"{en.numeric:.12g}",
                         f"{en.abs_err:.3e}", f"{en.rel_err:.3e}",
                         "skipped (near kink)" if en.skipped else ""))
        widths = [max(len(r[i]) for r in [header, *rows]) for i in range(len(header))]
        lines = ["  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip()
                 for r in [header, *rows]]
        lines.append(f"max abs err {self.max_abs_err:.3e}  max rel err {self.max_rel_err:.3e}"
                     f"  (tol_abs {self.tol_abs:g}, tol_rel {self.tol_rel:g})")
        lines.append(f"verdict: {self.verdict}")
        return "\n".join(lines)


def compare(symbolic: np.ndarray, fd: FiniteDifference, tol_abs: float, tol_rel: float) -> CheckReport:
    entries = []
    skipped = []
    m, n = fd.grid.shape
    for r in range(m):
        for c in range(n):
            s, num = float(symbolic[r, c]), float(fd.grid[r, c])
            abs_err = abs(s - num)
            scale = max(abs(s), abs(num))
            rel_err = abs_err / scale if scale > 0 else 0.0
            skip = bool(fd.near_kink[r, c])
            if skip:
                skipped.append((r, c))
            entries.append(CheckEntry(r, c, s, num, abs_err, rel_err, skip))
    return CheckReport(entries, tol_abs, tol_rel, skipped)


def check(e, v: Variable, env: dict, tol_abs: float = 1e-7, tol_rel: float = 1e-4,
          h: float | None = None) -> CheckReport:
    """Compare the symbolic Jacobian of ``e`` against central differences."""
    from .differentiator import jacobian

    sym = eval_jacobian(jacobian(e, v), env)
    fd = finite_diff(e, v, env, h)
    if sym.shape != fd.grid.shape:
        raise ShapeMismatch(f"symbolic Jacobian is {sym.shape}, oracle is {fd.grid.shape}")
    return compare(sym, fd, tol_abs, tol_rel)
