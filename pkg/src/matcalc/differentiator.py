"""Symbolic derivatives: scalar rules, gradients and numerator-layout Jacobians.

Vector variables are differentiated component by component. The i-th
component of a vector variable ``x`` is the scalar variable ``x_i`` (1-based),
which the evaluator resolves against the binding of ``x``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence, Union

from . import expr as E
from .canonical import canonical
from .errors import CyclicDefinition, DimensionMismatch, ShapeMismatch
from .expr import Expr, Shape, free_vars, simplify, substitute

NUMERATOR = "numerator"
DENOMINATOR = "denominator"


@dataclass(frozen=True)
class Jacobian:
    """An m x n matrix of scalar derivative expressions.

    ``rep`` is one of ``dense`` (``data`` is a tuple of row tuples),
    ``diagonal`` (m == n, ``data`` holds the diagonal), ``row`` (m == 1),
    ``col`` (n == 1) or ``scalar`` (1 x 1, ``data`` is a 1-tuple).
    """

    rows: int
    cols: int
    rep: str
    data: tuple
    layout: str = NUMERATOR

    def __post_init__(self):
        ok = {
            "dense": lambda: len(self.data) == self.rows and all(len(r) == self.cols for r in self.data),
            "diagonal": lambda: self.rows == self.cols == len(self.data),
            "row": lambda: self.rows == 1 and len(self.data) == self.cols,
            "col": lambda: self.cols == 1 and len(self.data) == self.rows,
            "scalar": lambda: self.rows == self.cols == 1 and len(self.data) == 1,
        }
        if self.rep not in ok or not ok[self.rep]():
            raise DimensionMismatch(f"inconsistent {self.rep} Jacobian {self.rows}x{self.cols}")

    def entry(self, i: int, j: int) -> Expr:
        if self.rep == "dense":
            return self.data[i][j]
        if self.rep == "diagonal":
            return self.data[i] if i == j else E.const(0.0)
        if self.rep == "row":
            return self.data[j]
        if self.rep == "col":
            return self.data[i]
        return self.data[0]

    def grid(self) -> list[list[Expr]]:
        return [[self.entry(i, j) for j in range(self.cols)] for i in range(self.rows)]

    def nonzero_entries(self) -> Iterator[tuple[tuple[int, int], Expr]]:
        if self.rep == "diagonal":
            for i, d in enumerate(self.data):
                yield (i, i), d
            return
        for i in range(self.rows):
            for j in range(self.cols):
                yield (i, j), self.entry(i, j)

    def materialize(self) -> Jacobian:
        return Jacobian(self.rows, self.cols, "dense",
                        tuple(tuple(r) for r in self.grid()), self.layout)

    def map(self, fn) -> Jacobian:
        if self.rep == "dense":
            data = tuple(tuple(fn(x) for x in r) for r in self.data)
        else:
            data = tuple(fn(x) for x in self.data)
        return Jacobian(self.rows, self.cols, self.rep, data, self.layout)

    def canonical(self) -> Jacobian:
        return self.map(canonical)

    def render(self) -> str:
        """``diag(...)``, ``[a, b]`` for a row, an aligned bracketed grid otherwise."""
        from .parser import pretty_print
        if self.rep == "scalar":
            return pretty_print(self.data[0])
        if self.rep == "diagonal":
            return "diag(" + ", ".join(pretty_print(d) for d in self.data) + ")"
        if self.rep == "row":
            return "[" + ", ".join(pretty_print(d) for d in self.data) + "]"
        cells = [[pretty_print(x) for x in r] for r in self.grid()]
        widths = [max(len(r[j]) for r in cells) for j in range(self.cols)]
        return "\n".join(
            "[ " + "  ".join(c.ljust(w) for c, w in zip(r, widths)) + " ]" for r in cells)


def from_grid(grid: Sequence[Sequence[Expr]], layout: str = NUMERATOR) -> Jacobian:
    """Pick the tightest representation for an m x n grid of entries."""
    m, n = len(grid), len(grid[0])
    if m == 1 and n == 1:
        return Jacobian(1, 1, "scalar", (grid[0][0],), layout)
    if m == 1:
        return Jacobian(1, n, "row", tuple(grid[0]), layout)
    if n == 1:
        return Jacobian(m, 1, "col", tuple(r[0] for r in grid), layout)
    return Jacobian(m, n, "dense", tuple(tuple(r) for r in grid), layout)


def identity(n: int) -> Jacobian:
    return Jacobian(n, n, "diagonal", tuple(E.const(1.0) for _ in range(n)))


def diagonal(entries: Sequence[Expr]) -> Jacobian:
    return Jacobian(len(entries), len(entries), "diagonal", tuple(entries))


# -- component expansion ----------------------------------------------------

def component_name(name: str, i: int) -> str:
    return f"{name}_{i + 1}"


def component(e: Expr, i: int) -> Expr:
    """Scalar expression for the i-th (0-based) entry of a vector expression."""
    k = e.kind
    if k == "var":
        return E.var(component_name(e.name, i))
    if k == "constvec":
        return E.const(e.value[i])
    if k == "expand":
        return scalarize(e.children[0])
    if k == "hadamard":
        return E.mul(component(e.children[0], i), component(e.children[1], i))
    if k in ("add", "sub", "hdiv"):
        return E.build(k, [component(c, i) for c in e.children])
    if k in E.BROADCAST_UNARY:
        return E.build(k, [component(e.children[0], i)], value=e.value)
    raise ShapeMismatch(f"{k} is not vector-valued")


def components(e: Expr) -> list[Expr]:
    return [component(e, i) for i in range(e.shape.length)]


def scalarize(e: Expr) -> Expr:
    """Rewrite a scalar expression so no vector-valued subterm remains."""
    k = e.kind
    if e.is_leaf:
        return e
    if k == "sum":
        return E.total(components(e.children[0]))
    if k == "dot":
        a, b = e.children
        return E.total([E.mul(component(a, i), component(b, i)) for i in range(a.shape.length)])
    return E.build(k, [scalarize(c) for c in e.children], value=e.value)


# -- derivative rules -------------------------------------------------------

def diff(e: Expr, seeds: dict[str, Expr]) -> Expr:
    """Directional (tangent) derivative of ``e``, same shape as ``e``.

    ``seeds`` maps variable names to their tangents; unlisted variables are
    held constant. ``diff(e, {"x": const(1)})`` is d/dx.
    """
    k = e.kind
    if k == "var":
        t = seeds.get(e.name)
        return t if t is not None else E.zeros(e.shape)
    if k in ("const", "constvec"):
        return E.zeros(e.shape)
    ch = e.children
    d = [diff(c, seeds) for c in ch]
    if k == "add":
        return E.add(d[0], d[1])
    if k == "sub":
        return E.sub(d[0], d[1])
    if k == "neg":
        return E.neg(d[0])
    if k in ("mul", "hadamard"):
        return E.add(E.mul(d[0], ch[1]), E.mul(ch[0], d[1]))
    if k == "hdiv":
        a, b = ch
        return E.sub(E.div(d[0], b), E.div(E.mul(a, d[1]), E.power(b, 2)))
    if k == "pow":
        p = e.value
        return E.mul(E.mul(E.const(p), E.power(ch[0], p - 1)), d[0])
    if k == "expand":
        return E.expand(d[0], e.shape.length)
    if k == "dot":
        return E.add(E.dot(d[0], ch[1]), E.dot(ch[0], d[1]))
    if k == "sum":
        return E.vsum(d[0])
    if k == "max0":
        return E.mul(E.call("step", ch[0]), d[0])
    if k == "step":
        return E.zeros(e.shape)
    if k == "sin":
        return E.mul(E.call("cos", ch[0]), d[0])
    if k == "cos":
        return E.neg(E.mul(E.call("sin", ch[0]), d[0]))
    if k == "ln":
        return E.div(d[0], ch[0])
    if k == "exp":
        return E.mul(E.call("exp", ch[0]), d[0])
    raise ValueError(f"no derivative rule for {k!r}")


def _name(v) -> str:
    return v.name if isinstance(v, Expr) else v


def _needs_scalarize(e: Expr, name: str) -> bool:
    return any(sh.is_vector and name.startswith(base + "_") for base, sh in free_vars(e).items())


def derive_scalar(e: Expr, v: Union[str, Expr]) -> Expr:
    """d e / d v for a scalar variable ``v``, simplified.

    ``v`` may name a component ``x_i`` of a vector variable in ``e``; the
    expression is then expanded into components first.
    """
    name = _name(v)
    if _needs_scalarize(e, name):
        e = scalarize(e)
    return simplify(diff(e, {name: E.const(1.0)}))


# -- variables ---------------------------------------------------------------

def _resolve(e, v) -> list[tuple[str, Shape]]:
    if isinstance(v, Expr):
        if v.kind != "var":
            raise ShapeMismatch("can only differentiate with respect to a variable")
        return [(v.name, v.shape)]
    if isinstance(v, str):
        v = [v]
    fv: dict[str, Shape] = {}
    for item in (e if isinstance(e, (list, tuple)) else [e]):
        fv.update(free_vars(item))
    return [(name, fv.get(name, E.SCALAR)) for name in v]


def _scalar_inputs(wrt: list[tuple[str, Shape]]) -> list[str]:
    names = []
    for name, shape in wrt:
        if shape.is_scalar:
            names.append(name)
        else:
            names.extend(component_name(name, j) for j in range(shape.length))
    return names


def _outputs(e) -> list[Expr]:
    if isinstance(e, (list, tuple)):
        for item in e:
            if item.shape.is_vector:
                raise ShapeMismatch("stacked functions must be scalar-valued")
        return [scalarize(item) for item in e]
    return components(e) if e.shape.is_vector else [scalarize(e)]


def jacobian_dense(e, v) -> Jacobian:
    """Entry-by-entry Jacobian, never using the diagonal shortcut."""
    inputs = _scalar_inputs(_resolve(e, v))
    outs = _outputs(e)
    grid = [[simplify(diff(f, {x: E.const(1.0)})) for x in inputs] for f in outs]
    if len(outs) > 1 and len(inputs) > 1:
        return Jacobian(len(outs), len(inputs), "dense", tuple(tuple(r) for r in grid))
    return from_grid(grid)


def gradient(e: Expr, v) -> Jacobian:
    """1 x n row of partials of a scalar expression.

    ``v`` is a vector variable or a sequence of scalar variable names, whose
    concatenation forms the input vector.
    """
    if e.shape.is_vector:
        raise ShapeMismatch("gradient needs a scalar-valued expression")
    inputs = _scalar_inputs(_resolve(e, v))
    flat = scalarize(e)
    entries = tuple(simplify(diff(flat, {x: E.const(1.0)})) for x in inputs)
    return Jacobian(1, len(entries), "row", entries)


def _elementwise_in(e: Expr, v: str) -> bool:
    k = e.kind
    if e.is_leaf:
        return True
    if k == "expand":
        return v not in free_vars(e.children[0])
    if e.shape.is_vector and (k in E.ELEMENTWISE_BINARY or k in E.BROADCAST_UNARY):
        return all(_elementwise_in(c, v) for c in e.children)
    return False


def detect_diagonal(e: Expr, v: Expr) -> Jacobian | None:
    """Diagonal Jacobian of ``e`` w.r.t. vector ``v`` when structurally provable.

    Succeeds when every operand reaches ``v`` only through the identity,
    element-wise operators and broadcast unary functions, and any expanded
    scalar is independent of ``v``. Returns None otherwise; that answer is
    sound but not complete.
    """
    if e.shape.is_scalar or v.shape.is_scalar or e.shape.length != v.shape.length:
        return None
    if not _elementwise_in(e, v.name):
        return None
    entries = []
    for i in range(e.shape.length):
        ci = component(e, i)
        entries.append(simplify(diff(ci, {component_name(v.name, i): E.const(1.0)})))
    return diagonal(entries)


def scalar_expansion_partials(e: Expr, z) -> Jacobian:
    """n x 1 column of d e_i / d z for a vector expression and scalar ``z``."""
    if e.shape.is_scalar:
        raise ShapeMismatch("expected a vector-valued expression")
    tangent = simplify(diff(e, {_name(z): E.const(1.0)}))
    return Jacobian(e.shape.length, 1, "col",
                    tuple(simplify(c) for c in components(tangent)))


def sum_reduction_grad(e: Expr, v) -> Jacobian:
    """Derivative of ``sum(inner)``: the derivative moves inside the sum."""
    if e.kind != "sum":
        raise ShapeMismatch("expected a sum(...) expression")
    ((name, shape),) = _resolve(e, v)
    if shape.is_scalar:
        return Jacobian(1, 1, "scalar", (derive_scalar(e, name),))
    parts = components(e.children[0])
    row = []
    for j in range(shape.length):
        xj = component_name(name, j)
        row.append(simplify(E.total([diff(p, {xj: E.const(1.0)}) for p in parts])))
    return Jacobian(1, shape.length, "row", tuple(row))


def jacobian(e, v) -> Jacobian:
    """Numerator-layout Jacobian of ``e`` (an expression or a list of scalar
    expressions stacked as a vector function) w.r.t. ``v``."""
    wrt = _resolve(e, v)
    target = E.build("var", name=wrt[0][0], shape=wrt[0][1]) if len(wrt) == 1 else [n for n, _ in wrt]
    if isinstance(e, Expr):
        if len(wrt) == 1:
            shape = target.shape
            if e.shape.is_vector and shape.is_vector:
                diag = detect_diagonal(e, target)
                return diag if diag is not None else jacobian_dense(e, target)
            if e.shape.is_vector:
                return scalar_expansion_partials(e, target)
            if shape.is_scalar:
                return Jacobian(1, 1, "scalar", (derive_scalar(e, target),))
        if e.shape.is_scalar:
            return gradient(e, target)
    return jacobian_dense(e, target)


# -- chain rules ------------------------------------------------------------

def _product_entry(a: Sequence[Expr], b: Sequence[Expr]) -> Expr:
    terms = [simplify(E.mul(x, y)) for x, y in zip(a, b)]
    return simplify(E.total([t for t in terms if not (t.kind == "const" and t.value == 0.0)]))


def vector_chain(f_of_g: Jacobian, g_of_x: Jacobian) -> Jacobian:
    """Matrix product (df/dg)(dg/dx); the operands do not commute."""
    if f_of_g.layout != NUMERATOR or g_of_x.layout != NUMERATOR:
        raise DimensionMismatch("vector_chain expects numerator-layout Jacobians")
    if f_of_g.cols != g_of_x.rows:
        raise DimensionMismatch(
            f"cannot chain {f_of_g.rows}x{f_of_g.cols} with {g_of_x.rows}x{g_of_x.cols}")
    if f_of_g.rep == "diagonal" and g_of_x.rep == "diagonal":
        return diagonal([simplify(E.mul(a, b)) for a, b in zip(f_of_g.data, g_of_x.data)])
    A, B = f_of_g.grid(), g_of_x.grid()
    grid = [[_product_entry(A[i], [B[k][j] for k in range(g_of_x.rows)])
             for j in range(g_of_x.cols)] for i in range(f_of_g.rows)]
    if f_of_g.rows > 1 and g_of_x.cols > 1:
        return Jacobian(f_of_g.rows, g_of_x.cols, "dense", tuple(tuple(r) for r in grid))
    return from_grid(grid)


def substitute_jacobian(j: Jacobian, mapping: dict[str, Expr]) -> Jacobian:
    return j.map(lambda x: simplify(substitute(x, mapping)))


def total_derivative(f: Expr, x: str, intermediates: Sequence[tuple[str, Expr]]) -> Expr:
    """d f / d x summed over every path through the intermediate variables.

    ``intermediates`` is a topologically ordered list of ``(name, definition)``;
    ``f`` and each definition may mention ``x`` and earlier intermediates.
    The result has the intermediates substituted back in.
    """
    x = _name(x)
    names = [n for n, _ in intermediates]
    for i, (name, definition) in enumerate(intermediates):
        later = set(names[i:]) & set(free_vars(definition))
        if later:
            raise CyclicDefinition(
                f"{name} is defined in terms of {sorted(later)}, which are not defined before it")

    cache: dict[str, Expr] = {}

    def total(g: Expr, upto: int) -> Expr:
        terms = [derive_scalar(g, x)]
        used = free_vars(g)
        for name, definition in intermediates[:upto]:
            if name in used:
                ui = names.index(name)
                if name not in cache:
                    cache[name] = total(definition, ui)
                terms.append(E.mul(derive_scalar(g, name), cache[name]))
        return simplify(E.total(terms))

    result = total(f, len(intermediates))
    for name, definition in reversed(intermediates):
        result = substitute(result, {name: definition})
    return simplify(result)


def transpose_layout(j: Jacobian) -> Jacobian:
    """Switch between numerator and denominator layout (a transpose)."""
    layout = DENOMINATOR if j.layout == NUMERATOR else NUMERATOR
    if j.rep == "dense":
        data = tuple(tuple(j.data[i][c] for i in range(j.rows)) for c in range(j.cols))
        return Jacobian(j.cols, j.rows, "dense", data, layout)
    rep = {"row": "col", "col": "row"}.get(j.rep, j.rep)
    return Jacobian(j.cols, j.rows, rep, j.data, layout)
