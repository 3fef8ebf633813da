"""Numeric semantics of every node kind.

Scalars are Python floats, vectors are 1-D float64 arrays. Shared by the
evaluator, constant folding in ``simplify`` and the tape sweeps.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DivisionByZero, DomainError

UNARY_FUNCS = ("sin", "cos", "ln", "exp", "max0", "step")


def _out(x):
    if isinstance(x, np.ndarray):
        return x.astype(np.float64, copy=False)
    return float(x)


def _divide(a, b):
    if np.any(np.asarray(b) == 0.0):
        raise DivisionByZero("element-wise division by zero")
    return _out(np.divide(a, b))


def _power(a, p: float):
    arr = np.asarray(a, dtype=np.float64)
    if p < 0 and np.any(arr == 0.0):
        raise DivisionByZero(f"zero raised to negative power {p:g}")
    if not float(p).is_integer() and np.any(arr < 0.0):
        raise DomainError(f"negative base raised to non-integer power {p:g}")
    return _out(np.power(arr, p))


def _ln(a):
    if np.any(np.asarray(a) <= 0.0):
        raise DomainError("ln of a nonpositive value")
    return _out(np.log(a))


def apply(kind: str, args: list, exponent: float | None = None, length: int | None = None):
    """Apply operator ``kind`` to already-evaluated ``args``."""
    match kind:
        case "add":
            return _out(args[0] + args[1])
        case "sub":
            return _out(args[0] - args[1])
        case "mul" | "hadamard":
            return _out(args[0] * args[1])
        case "hdiv":
            return _divide(args[0], args[1])
        case "neg":
            return _out(-args[0])
        case "pow":
            return _power(args[0], exponent)
        case "expand":
            return np.full(length, float(args[0]))
        case "dot":
            return float(np.dot(args[0], args[1]))
        case "sum":
            return float(np.sum(args[0]))
        case "max0":
            return _out(np.maximum(0.0, args[0]))
        case "step":
            return _out(np.where(np.asarray(args[0]) > 0.0, 1.0, 0.0))
        case "sin":
            return _out(np.sin(args[0]))
        case "cos":
            return _out(np.cos(args[0]))
        case "ln":
            return _ln(args[0])
        case "exp":
            return _out(np.exp(args[0]))
    raise ValueError(f"no numeric rule for node kind {kind!r}")


def local_jacobians(kind: str, args: list, exponent: float | None = None,
                    length: int | None = None) -> list[np.ndarray]:
    """Dense numerator-layout partials of one operator w.r.t. each operand.

    Scalars count as size-1 vectors, so every block is 2-D (out x in).
    """
    flat = [np.atleast_1d(np.asarray(a, dtype=np.float64)) for a in args]
    match kind:
        case "add":
            n = flat[0].size
            return [np.eye(n), np.eye(n)]
        case "sub":
            n = flat[0].size
            return [np.eye(n), -np.eye(n)]
        case "neg":
            return [-np.eye(flat[0].size)]
        case "mul" | "hadamard":
            a, b = flat
            return [np.diag(b), np.diag(a)]
        case "hdiv":
            a, b = flat
            if np.any(b == 0.0):
                raise DivisionByZero("element-wise division by zero")
            return [np.diag(1.0 / b), np.diag(-a / b**2)]
        case "pow":
            (a,) = flat
            if exponent == 0:
                return [np.zeros((a.size, a.size))]
            d = exponent * np.atleast_1d(_power(a, exponent - 1))
            return [np.diag(d)]
        case "expand":
            return [np.ones((length, 1))]
        case "dot":
            a, b = flat
            return [b[None, :], a[None, :]]
        case "sum":
            return [np.ones((1, flat[0].size))]
        case "max0":
            return [np.diag(np.where(flat[0] > 0.0, 1.0, 0.0))]
        case "step":
            return [np.zeros((flat[0].size, flat[0].size))]
        case "sin":
            return [np.diag(np.cos(flat[0]))]
        case "cos":
            return [np.diag(-np.sin(flat[0]))]
        case "ln":
            _ln(flat[0])
            return [np.diag(1.0 / flat[0])]
        case "exp":
            return [np.diag(np.exp(flat[0]))]
    raise ValueError(f"no partial rule for node kind {kind!r}")


def format_number(v: float) -> str:
    """Shortest text for a float that reads back to the same value."""
    v = float(v)
    if math.isfinite(v) and v.is_integer() and abs(v) < 1e16:
        return str(int(v))
    return repr(v)
