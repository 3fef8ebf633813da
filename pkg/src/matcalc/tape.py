"""Lowering expressions to a tape of single-operation bindings u1..un.

The tape is swept forward (one input direction per sweep) or in reverse (all
leaf adjoints in one sweep), and can be differentiated symbolically by
chaining the local partials of each entry and substituting the entries back.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from . import expr as E
from . import ops
from .canonical import canonical
from .differentiator import diff, jacobian
from .evaluator import lookup
from .expr import Expr, Shape, simplify, substitute
from .errors import MatcalcError, ShapeMismatch
from .parser import pretty_print

Operand = Union[str, Expr]  # an earlier entry id, or a leaf expression


@dataclass(frozen=True)
class TapeEntry:
    id: str
    kind: str  # a node kind, or "alias" for a tape that is a single leaf
    operands: tuple[Operand, ...]
    shape: Shape
    value: float | None = None  # pow exponent

    def placeholder(self) -> Expr:
        return E.build("var", name=self.id, shape=self.shape)

    def local(self, shapes: dict[str, Shape]) -> Expr:
        """This entry's single operation, with earlier entries as variables."""
        args = [E.build("var", name=o, shape=shapes[o]) if isinstance(o, str) else o
                for o in self.operands]
        if self.kind == "alias":
            return args[0]
        return E.build(self.kind, args, value=self.value, length=self.shape.length)


@dataclass(frozen=True)
class Tape:
    entries: tuple[TapeEntry, ...]
    result: str

    @property
    def shapes(self) -> dict[str, Shape]:
        return {en.id: en.shape for en in self.entries}

    def locals(self) -> list[tuple[TapeEntry, Expr]]:
        shapes = self.shapes
        return [(en, en.local(shapes)) for en in self.entries]

    def reconstruct(self) -> Expr:
        """Substitute every entry back to recover one expression tree."""
        built: dict[str, Expr] = {}
        for en, local in self.locals():
            built[en.id] = substitute(local, built)
        return built[self.result]


def lower(e: Expr) -> Tape:
    """One entry per operator node of ``simplify(e)``, innermost first.

    Repeated subtrees are lowered once per occurrence.
    """
    e = simplify(e)
    entries: list[TapeEntry] = []

    def visit(node: Expr) -> Operand:
        if node.is_leaf:
            return node
        operands = tuple(visit(c) for c in node.children)
        uid = f"u{len(entries) + 1}"
        entries.append(TapeEntry(uid, node.kind, operands, node.shape, node.value))
        return uid

    top = visit(e)
    if not isinstance(top, str):
        entries.append(TapeEntry("u1", "alias", (top,), e.shape))
        top = "u1"
    return Tape(tuple(entries), top)


# -- numeric sweeps ---------------------------------------------------------

def _leaf_value(leaf: Expr, env: dict):
    if leaf.kind == "var":
        return lookup(leaf.name, leaf.shape, env)
    if leaf.kind == "const":
        return leaf.value
    return np.array(leaf.value)


def _values(t: Tape, env: dict) -> tuple[dict, dict]:
    vals: dict[str, object] = {}
    args_of: dict[str, list] = {}
    for en in t.entries:
        args = [vals[o] if isinstance(o, str) else _leaf_value(o, env) for o in en.operands]
        args_of[en.id] = args
        try:
            vals[en.id] = args[0] if en.kind == "alias" else ops.apply(
                en.kind, args, en.value, en.shape.length)
        except MatcalcError as exc:
            raise type(exc)(f"{exc} (at tape entry {en.id})") from exc
    return vals, args_of


def _partials(en: TapeEntry, args: list) -> list[np.ndarray]:
    if en.kind == "alias":
        n = np.atleast_1d(args[0]).size
        return [np.eye(n)]
    try:
        return ops.local_jacobians(en.kind, args, en.value, en.shape.length)
    except MatcalcError as exc:
        raise type(exc)(f"{exc} (at tape entry {en.id})") from exc


def _shaped(flat: np.ndarray, shape: Shape):
    return float(flat[0]) if shape.is_scalar else flat


def forward_mode(t: Tape, env: dict, seed: Union[str, tuple[str, int]]):
    """One sweep in tape order; returns ``(value, d value / d seed)``.

    ``seed`` is a scalar variable name or ``(vector name, 0-based index)``.
    """
    name, index = (seed, None) if isinstance(seed, str) else seed
    vals, args_of = _values(t, env)
    tangents: dict[str, np.ndarray] = {}

    def tangent_of(o: Operand) -> np.ndarray:
        if isinstance(o, str):
            return tangents[o]
        size = o.shape.size
        out = np.zeros(size)
        if o.kind == "var" and o.name == name:
            out[0 if index is None else index] = 1.0
        return out

    for en in t.entries:
        jacs = _partials(en, args_of[en.id])
        total = np.zeros(en.shape.size)
        for o, jac in zip(en.operands, jacs):
            total = total + jac @ tangent_of(o)
        tangents[en.id] = total
    res = t.result
    return vals[res], _shaped(tangents[res], t.shapes[res])


def reverse_mode(t: Tape, env: dict, output: int | None = None) -> dict[str, object]:
    """Adjoint of every variable leaf after one forward and one reverse sweep.

    Contributions from a variable used several times are added together. A
    vector-valued tape needs ``output``, the 0-based result component whose
    row of the Jacobian is wanted.
    """
    res_shape = t.shapes[t.result]
    if res_shape.is_vector and output is None:
        raise ShapeMismatch("reverse mode on a vector result needs an output index")
    vals, args_of = _values(t, env)
    adj: dict[str, np.ndarray] = {en.id: np.zeros(en.shape.size) for en in t.entries}
    adj[t.result] = np.ones(1) if res_shape.is_scalar else np.eye(res_shape.length)[output]
    leaves: dict[str, np.ndarray] = {}
    leaf_shapes: dict[str, Shape] = {}
    for en in reversed(t.entries):
        jacs = _partials(en, args_of[en.id])
        for o, jac in zip(en.operands, jacs):
            contrib = adj[en.id] @ jac
            if isinstance(o, str):
                adj[o] = adj[o] + contrib
            elif o.kind == "var":
                leaves[o.name] = leaves.get(o.name, np.zeros(o.shape.size)) + contrib
                leaf_shapes[o.name] = o.shape
    return {name: _shaped(g, leaf_shapes[name]) for name, g in leaves.items()}


# -- symbolic ---------------------------------------------------------------

def symbolic_backsub(t: Tape, v: str, index: int | None = None) -> Expr:
    """Symbolic d(result)/dv by chaining local partials along every path.

    Each entry's derivative is the sum over its operands of the local partial
    times the operand's derivative; entries are then substituted back so the
    result mentions only the original variables. ``index`` selects a component
    when ``v`` is a vector variable. For a vector-valued tape the result is
    the Jacobian column for that input.
    """
    seeds: dict[str, Expr] = {}
    for en, local in t.locals():
        leaf_seed = {}
        for name, shape in E.free_vars(local).items():
            if name == v and name not in seeds:
                leaf_seed[name] = E.const(1.0) if shape.is_scalar else E.unit(shape.length, index)
        seeds[en.id] = simplify(diff(local, {**seeds, **leaf_seed}))
    result = seeds[t.result]
    for en, local in reversed(t.locals()):
        result = substitute(result, {en.id: local})
    return simplify(result)


def _operand_label(o: Operand) -> str:
    return o if isinstance(o, str) else pretty_print(o)


def local_partial_text(t: Tape) -> list[tuple[TapeEntry, Expr, list[tuple[str, str]]]]:
    """Each entry with its local expression and rendered local partials."""
    out = []
    for en, local in t.locals():
        partials = []
        seen = set()
        for o in en.operands:
            if not isinstance(o, str) and o.kind != "var":
                continue
            label = _operand_label(o)
            if label in seen:
                continue
            seen.add(label)
            var = o if not isinstance(o, str) else E.build("var", name=o, shape=t.shapes[o])
            if en.shape.is_scalar and var.shape.is_scalar:
                partials.append((label, pretty_print(canonical(diff(local, {var.name: E.const(1.0)})))))
            else:
                partials.append((label, jacobian(local, var).canonical().render()))
        out.append((en, local, partials))
    return out


def render(t: Tape) -> str:
    """One line per entry: ``u3 = u2^2   ∂u3/∂u2 = 2 * u2``."""
    lines = []
    for en, local, partials in local_partial_text(t):
        head = f"{en.id} = {pretty_print(local)}"
        parts = "   ".join(f"∂{en.id}/∂{label} = {text}" for label, text in partials)
        lines.append(f"{head}   {parts}" if parts else head)
    return "\n".join(lines)


_OP_LABEL = {"add": "+", "sub": "-", "mul": "*", "hadamard": "(*)", "hdiv": "(/)",
             "neg": "neg", "expand": "expand"}


def op_label(en: TapeEntry) -> str:
    if en.kind == "pow":
        return "sqr" if en.value == 2 else f"^{ops.format_number(en.value)}"
    if en.kind == "alias":
        return "="
    return _OP_LABEL.get(en.kind, en.kind)


def _quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def to_dot(t: Tape, name: str = "tape") -> str:
    """Graphviz digraph with one node per entry and per variable.

    Constants get their own node at each use; variables are shared, so a
    variable used twice has two outgoing edges.
    """
    lines = [f"digraph {name} {{", "  rankdir=BT;"]
    declared: set[str] = set()
    n_const = 0
    for en in t.entries:
        lines.append(f"  {en.id} [label={_quote(f'{en.id} = {op_label(en)}')}];")
    for en in t.entries:
        for o in en.operands:
            if isinstance(o, str):
                src = o
            elif o.kind == "var":
                src = _quote(o.name)
                if o.name not in declared:
                    declared.add(o.name)
                    lines.insert(2, f"  {src} [shape=plaintext];")
            else:
                n_const += 1
                src = f"c{n_const}"
                lines.append(f"  {src} [label={_quote(pretty_print(o))}, shape=plaintext];")
            lines.append(f"  {src} -> {en.id};")
    lines.append("}")
    return "\n".join(lines) + "\n"
