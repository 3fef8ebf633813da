"""Immutable expression trees over scalar and column-vector values."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Union

import numpy as np

from . import ops
from .errors import ArityError, ConflictingShape, MatcalcError, ShapeMismatch


@dataclass(frozen=True)
class Shape:
    """``length is None`` for scalars; vectors are columns of ``length`` items."""

    length: int | None = None

    def __post_init__(self):
        if self.length is not None and self.length < 1:
            raise ShapeMismatch(f"vector length must be >= 1, got {self.length}")

    @classmethod
    def vector(cls, n: int) -> Shape:
        return cls(int(n))

    @property
    def is_scalar(self) -> bool:
        return self.length is None

    @property
    def is_vector(self) -> bool:
        return self.length is not None

    @property
    def size(self) -> int:
        return 1 if self.length is None else self.length

    def __str__(self):
        return "Scalar" if self.length is None else f"Vector({self.length})"


SCALAR = Shape()

LEAVES = ("var", "const", "constvec")
ELEMENTWISE_BINARY = ("add", "sub", "hadamard", "hdiv")
BROADCAST_UNARY = ("neg", "pow", "sin", "cos", "ln", "exp", "max0", "step")
FUNCTIONS = ("sin", "cos", "ln", "exp", "max0", "step", "sum", "dot")
_ARITY = {
    "add": 2, "sub": 2, "mul": 2, "hadamard": 2, "hdiv": 2, "dot": 2,
    "pow": 1, "expand": 1, "sum": 1, "neg": 1,
    "max0": 1, "step": 1, "sin": 1, "cos": 1, "ln": 1, "exp": 1,
    "var": 0, "const": 0, "constvec": 0,
}
KINDS = frozenset(_ARITY)


@dataclass(frozen=True, repr=False)
class Expr:
    """One node of an expression tree.

    ``name`` is set for variables, ``value`` holds the constant (a float or a
    tuple of floats) or the exponent of a ``pow`` node. Build nodes through
    :func:`build` or the helper constructors so that the cached shape is
    always the inferred one.
    """

    kind: str
    children: tuple[Expr, ...] = ()
    shape: Shape = SCALAR
    name: str | None = None
    value: Union[float, tuple[float, ...], None] = None
    _hash: int = field(default=0, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(
            self, "_hash",
            hash((self.kind, self.children, self.shape, self.name, self.value)))

    def __hash__(self):
        return self._hash

    def __str__(self):
        from .parser import pretty_print
        return pretty_print(self)

    def __repr__(self):
        return f"Expr({self}: {self.shape})"

    @property
    def is_leaf(self) -> bool:
        return self.kind in LEAVES

    @property
    def exponent(self) -> float:
        assert self.kind == "pow"
        return self.value


Env = dict  # variable name -> float | 1-D array


def _infer(kind: str, children: tuple[Expr, ...], length: int | None) -> Shape:
    shapes = [c.shape for c in children]
    if kind in ("add", "sub", "hadamard", "hdiv"):
        if shapes[0] != shapes[1]:
            raise ShapeMismatch(f"{kind} operands differ in shape: {shapes[0]} vs {shapes[1]}")
        return shapes[0]
    if kind == "mul":
        if not (shapes[0].is_scalar and shapes[1].is_scalar):
            raise ShapeMismatch("scalar multiplication needs two scalars; use (*) for vectors")
        return SCALAR
    if kind == "dot":
        if shapes[0].is_scalar or shapes[1].is_scalar:
            raise ShapeMismatch("dot needs two vectors")
        if shapes[0] != shapes[1]:
            raise ShapeMismatch(f"dot operands differ in length: {shapes[0]} vs {shapes[1]}")
        return SCALAR
    if kind == "sum":
        if shapes[0].is_scalar:
            raise ShapeMismatch("sum needs a vector operand")
        return SCALAR
    if kind == "expand":
        if not shapes[0].is_scalar:
            raise ShapeMismatch("only scalars can be expanded")
        return Shape.vector(length)
    return shapes[0]


def build(kind: str, children: Iterable[Expr] = (), *, name: str | None = None,
          value=None, shape: Shape | None = None, length: int | None = None) -> Expr:
    """Construct a node of ``kind`` with its inferred shape.

    ``value`` is the constant for ``const``/``constvec`` and the exponent for
    ``pow``; ``length`` is the target length of ``expand``; ``shape`` declares
    a variable.
    """
    if kind not in KINDS:
        raise MatcalcError(f"unknown node kind {kind!r}")
    children = tuple(children)
    if len(children) != _ARITY[kind]:
        raise ArityError(f"{kind} takes {_ARITY[kind]} operand(s), got {len(children)}")
    if kind == "var":
        if not name:
            raise MatcalcError("variables need a name")
        return Expr("var", (), shape or SCALAR, name=name)
    if kind == "const":
        return Expr("const", (), SCALAR, value=float(value))
    if kind == "constvec":
        values = tuple(float(v) for v in value)
        return Expr("constvec", (), Shape.vector(len(values)), value=values)
    if kind == "pow":
        return Expr("pow", children, children[0].shape, value=float(value))
    if kind == "expand":
        return Expr("expand", children, _infer(kind, children, length))
    return Expr(kind, children, _infer(kind, children, None))


# -- constructors -----------------------------------------------------------

def var(name: str, length: int | None = None) -> Expr:
    return build("var", name=name, shape=Shape(length))


def const(v: float) -> Expr:
    return build("const", value=v)


def constvec(values) -> Expr:
    return build("constvec", value=values)


def zeros(shape: Shape) -> Expr:
    return const(0.0) if shape.is_scalar else constvec([0.0] * shape.length)


def ones(shape: Shape) -> Expr:
    return const(1.0) if shape.is_scalar else constvec([1.0] * shape.length)


def unit(n: int, j: int) -> Expr:
    return constvec([1.0 if i == j else 0.0 for i in range(n)])


def expand(s: Expr, n: int) -> Expr:
    return build("expand", [s], length=n)


def _broadcast(a: Expr, b: Expr) -> tuple[Expr, Expr]:
    if a.shape.is_scalar and b.shape.is_vector:
        a = expand(a, b.shape.length)
    elif a.shape.is_vector and b.shape.is_scalar:
        b = expand(b, a.shape.length)
    return a, b


def elementwise(kind: str, a: Expr, b: Expr) -> Expr:
    """Element-wise binary op, inserting ``expand`` when a scalar meets a vector."""
    return build(kind, _broadcast(a, b))


def add(a: Expr, b: Expr) -> Expr:
    return elementwise("add", a, b)


def sub(a: Expr, b: Expr) -> Expr:
    return elementwise("sub", a, b)


def mul(a: Expr, b: Expr) -> Expr:
    """Scalar product, or Hadamard product once a vector is involved."""
    if a.shape.is_scalar and b.shape.is_scalar:
        return build("mul", [a, b])
    return elementwise("hadamard", a, b)


def hadamard(a: Expr, b: Expr) -> Expr:
    return elementwise("hadamard", a, b)


def div(a: Expr, b: Expr) -> Expr:
    return elementwise("hdiv", a, b)


def power(a: Expr, p: float) -> Expr:
    return build("pow", [a], value=p)


def neg(a: Expr) -> Expr:
    return build("neg", [a])


def call(fn: str, *args: Expr) -> Expr:
    return build(fn, args)


def dot(a: Expr, b: Expr) -> Expr:
    return build("dot", [a, b])


def vsum(a: Expr) -> Expr:
    return build("sum", [a])


def total(terms: list[Expr], shape: Shape = SCALAR) -> Expr:
    """Left-nested sum of ``terms`` (zero when empty)."""
    if not terms:
        return zeros(shape)
    acc = terms[0]
    for t in terms[1:]:
        acc = add(acc, t)
    return acc


# -- queries ----------------------------------------------------------------

def shape_of(e: Expr) -> Shape:
    return e.shape


def free_vars(e: Expr) -> dict[str, Shape]:
    """Variables reachable in ``e`` keyed by name, in first-seen order."""
    found: dict[str, Shape] = {}
    stack = [e]
    while stack:
        node = stack.pop()
        if node.kind == "var":
            prev = found.setdefault(node.name, node.shape)
            if prev != node.shape:
                raise ConflictingShape(
                    f"variable {node.name!r} used as both {prev} and {node.shape}")
        stack.extend(reversed(node.children))
    return found


def substitute(e: Expr, mapping: dict[str, Expr]) -> Expr:
    """Replace variables by name; replacement shapes must match."""
    if e.kind == "var":
        rep = mapping.get(e.name)
        if rep is None:
            return e
        if rep.shape != e.shape:
            raise ShapeMismatch(f"cannot substitute {rep.shape} for {e.name!r}: {e.shape}")
        return rep
    if e.is_leaf:
        return e
    kids = tuple(substitute(c, mapping) for c in e.children)
    if kids == e.children:
        return e
    return Expr(e.kind, kids, e.shape, e.name, e.value)


def node_count(e: Expr) -> int:
    return 1 + sum(node_count(c) for c in e.children)


# -- simplification ---------------------------------------------------------

def _is_const(e: Expr, v: float | None = None) -> bool:
    """True for a constant leaf (or expanded constant) whose entries all equal ``v``."""
    if e.kind == "const":
        return v is None or e.value == v
    if e.kind == "constvec":
        return v is None or all(x == v for x in e.value)
    if e.kind == "expand":
        return _is_const(e.children[0], v)
    return False


def _const_value(e: Expr):
    if e.kind == "const":
        return e.value
    if e.kind == "constvec":
        return np.array(e.value)
    return np.full(e.shape.length, e.children[0].value)


def _fold(e: Expr, kids: tuple[Expr, ...]) -> Expr | None:
    # expand(const) stays symbolic so vector results keep printing as text
    if e.kind == "expand" or not kids or not all(
            k.kind in ("const", "constvec") or (k.kind == "expand" and _is_const(k)) for k in kids):
        return None
    try:
        with np.errstate(all="ignore"):
            out = ops.apply(e.kind, [_const_value(k) for k in kids], e.value, e.shape.length)
    except MatcalcError:
        return None
    if isinstance(out, np.ndarray):
        if not np.all(np.isfinite(out)):
            return None
        return constvec(out.tolist())
    if not np.isfinite(out):
        return None
    return const(out)


def simplify(e: Expr) -> Expr:
    """Shallow, semantics-preserving cleanup.

    Only constant folding, the 0/1 identities (u+0, u*1, u*0, u^0, u^1),
    double negation and sums of constant vectors are applied; there is no
    reordering or factoring.
    """
    if e.is_leaf:
        return e
    kids = tuple(simplify(c) for c in e.children)
    folded = _fold(e, kids)
    if folded is not None:
        return folded
    k = e.kind
    if k == "add":
        a, b = kids
        if _is_const(b, 0.0):
            return a
        if _is_const(a, 0.0):
            return b
    elif k == "sub":
        a, b = kids
        if _is_const(b, 0.0):
            return a
        if _is_const(a, 0.0):
            return simplify(neg(b))
    elif k in ("mul", "hadamard"):
        a, b = kids
        if _is_const(a, 0.0) or _is_const(b, 0.0):
            return zeros(e.shape)
        if _is_const(a, 1.0):
            return b
        if _is_const(b, 1.0):
            return a
    elif k == "hdiv":
        a, b = kids
        if _is_const(b, 1.0):
            return a
        if _is_const(a, 0.0):
            return zeros(e.shape)
    elif k == "pow":
        if e.value == 0.0:
            return ones(e.shape)
        if e.value == 1.0:
            return kids[0]
    elif k == "neg":
        if kids[0].kind == "neg":
            return kids[0].children[0]
    elif k == "dot":
        if _is_const(kids[0], 0.0) or _is_const(kids[1], 0.0):
            return const(0.0)
    elif k == "sum":
        if _is_const(kids[0], 0.0):
            return const(0.0)
    if kids == e.children:
        return e
    return Expr(k, kids, e.shape, e.name, e.value)
