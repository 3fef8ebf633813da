"""Canonical form for comparing symbolic results.

Scalar expressions are flattened into a sum of monomials (coefficient times
atoms raised to real powers), products are distributed over sums and like
terms are merged; the result is rebuilt with a fixed ordering. Two results
that differ only in operand order, grouping or constant bookkeeping
("6yx" vs "6xy", "2x/x^2" vs "2/x") get the same canonical tree.

Powers of sums are never expanded, so ``(x+1)^2`` and ``(x+1)*(x+1)`` keep
different canonical forms.
"""

from __future__ import annotations

from . import expr as E
from .expr import Expr, simplify
from .parser import pretty_print

Monomial = tuple[tuple[Expr, float], ...]
Poly = dict[Monomial, float]


def atom_key(atom: Expr) -> tuple:
    if atom.kind == "var":
        # reverse lexicographic, which reproduces the usual "6yx", "6 x2 x1"
        return (0, tuple(-ord(ch) for ch in atom.name) + (0,))
    if atom.kind in ("sin", "cos", "ln", "exp", "max0", "step"):
        return (1, atom.kind, pretty_print(atom))
    return (2, pretty_print(atom))


def _mono_key(mono: Monomial) -> tuple:
    return (len(mono), tuple((atom_key(a), p) for a, p in mono))


def _mono(factors: dict[Expr, float]) -> Monomial:
    return tuple(sorted(((a, p) for a, p in factors.items() if p != 0),
                        key=lambda ap: atom_key(ap[0])))


def _atom(a: Expr, p: float = 1.0) -> Poly:
    return {((a, p),): 1.0}


def _add(x: Poly, y: Poly, sign: float = 1.0) -> Poly:
    out = dict(x)
    for m, c in y.items():
        out[m] = out.get(m, 0.0) + sign * c
        if out[m] == 0.0:
            del out[m]
    return out


def _mul(x: Poly, y: Poly) -> Poly:
    out: Poly = {}
    for m1, c1 in x.items():
        for m2, c2 in y.items():
            factors: dict[Expr, float] = dict(m1)
            for a, p in m2:
                factors[a] = factors.get(a, 0.0) + p
            m = _mono(factors)
            out[m] = out.get(m, 0.0) + c1 * c2
            if out[m] == 0.0:
                del out[m]
    return out


def _pow(x: Poly, p: float, base: Expr) -> Poly:
    if p == 0:
        return {(): 1.0}
    if not x:
        return {} if p > 0 else _atom(base, p)
    if len(x) == 1:
        ((mono, c),) = x.items()
        if float(p).is_integer():
            return {_mono({a: q * p for a, q in mono}): c**p}
        if c == 1.0 and len(mono) == 1 and mono[0][1] == 1.0:
            return {((mono[0][0], p),): 1.0}
    return _atom(from_poly(x) if len(x) > 1 else canonical(base), p)


def _inverse(x: Poly, base: Expr) -> Poly:
    return _pow(x, -1.0, base)


def to_poly(e: Expr) -> Poly:
    """Flatten a scalar expression into monomials."""
    k = e.kind
    if k == "const":
        return {(): e.value} if e.value != 0 else {}
    if k == "var":
        return _atom(e)
    if k == "add":
        return _add(to_poly(e.children[0]), to_poly(e.children[1]))
    if k == "sub":
        return _add(to_poly(e.children[0]), to_poly(e.children[1]), -1.0)
    if k == "neg":
        return {m: -c for m, c in to_poly(e.children[0]).items()}
    if k in ("mul", "hadamard"):
        return _mul(to_poly(e.children[0]), to_poly(e.children[1]))
    if k == "hdiv":
        a, b = e.children
        return _mul(to_poly(a), _inverse(to_poly(b), b))
    if k == "pow":
        return _pow(to_poly(e.children[0]), e.value, e.children[0])
    if k in ("sin", "cos", "ln", "exp", "max0", "step"):
        return _atom(E.build(k, [canonical(e.children[0])]))
    if k == "sum":
        return _atom(E.vsum(canonical(e.children[0])))
    if k == "dot":
        a, b = sorted((canonical(c) for c in e.children), key=pretty_print)
        return _atom(E.dot(a, b))
    raise ValueError(f"cannot flatten {k!r} in scalar context")


def _product(factors: list[Expr]) -> Expr:
    acc = factors[0]
    for f in factors[1:]:
        acc = E.mul(acc, f)
    return acc


def _power_of(a: Expr, p: float) -> Expr:
    return a if p == 1.0 else E.power(a, p)


def _term(mono: Monomial, c: float) -> Expr:
    """Positive-magnitude term; the caller applies the sign."""
    num = [_power_of(a, p) for a, p in mono if p > 0]
    den = [_power_of(a, -p) for a, p in mono if p < 0]
    mag = abs(c)
    if mag != 1.0 or not num:
        num.insert(0, E.const(mag))
    out = _product(num)
    if den:
        out = E.div(out, _product(den))
    return out


def from_poly(x: Poly) -> Expr:
    if not x:
        return E.const(0.0)
    items = sorted(x.items(), key=lambda mc: _mono_key(mc[0]))
    acc = None
    for mono, c in items:
        t = _term(mono, c)
        if acc is None:
            if c < 0:
                t = E.const(-abs(c)) if t.kind == "const" else E.neg(t)
            acc = t
        else:
            acc = E.add(acc, t) if c > 0 else E.sub(acc, t)
    return acc


def _canonical_vector(e: Expr) -> Expr:
    k = e.kind
    if e.is_leaf:
        return e
    if k == "expand":
        return E.expand(canonical(e.children[0]), e.shape.length)
    kids = [canonical(c) for c in e.children]
    if k in ("add", "hadamard"):
        kids.sort(key=lambda c: (c.kind == "expand", pretty_print(c)))
    return E.build(k, kids, value=e.value)


def canonical(e: Expr) -> Expr:
    """Canonical tree of ``e``; numerically equal wherever ``e`` is defined."""
    e = simplify(e)
    if e.shape.is_vector:
        return _canonical_vector(e)
    return from_poly(to_poly(e))


def equivalent(a: Expr, b: Expr) -> bool:
    return canonical(a) == canonical(b)
