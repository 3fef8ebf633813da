"""Text syntax for expressions: a recursive-descent parser and its inverse.

Grammar (whitespace-insensitive)::

    expr   := term (("+" | "-") term)*
    term   := unary (("*" | "(*)" | "(/)") unary)*
    unary  := "-" unary | power
    power  := atom ("^" ["-"] number)?
    atom   := number | ident | call | "(" expr ")"
    call   := fname "(" expr ("," expr)? ")"

``^`` binds tighter than unary minus, so ``-x^2`` is ``-(x^2)``. A minus sign
directly in front of a bare number literal is folded into a negative constant.
``⊗`` and ``⊘`` are accepted for ``(*)`` and ``(/)``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Mapping

from . import expr as E
from .errors import ExprSyntaxError, ShapeMismatch, UnknownFunction
from .expr import Expr, Shape
from .ops import format_number

_FUNCS = {"sin": 1, "cos": 1, "ln": 1, "exp": 1, "max0": 1, "step": 1, "sum": 1, "dot": 2}

_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<had>\(\s*\*\s*\)|⊗)
  | (?P<hdiv>\(\s*/\s*\)|⊘)
  | (?P<op>[-+*^(),])
""", re.VERBOSE)


@dataclass(frozen=True)
class Token:
    kind: str  # num, ident, op, end
    text: str
    pos: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        if kind == "had":
            tokens.append(Token("op", "(*)", pos))
        elif kind == "hdiv":
            tokens.append(Token("op", "(/)", pos))
        elif kind != "ws":
            tokens.append(Token(kind, m.group(), pos))
        pos = m.end()
    tokens.append(Token("end", "", len(text)))
    return tokens


@dataclass
class SourceExpr:
    """Expression text plus the vector declarations that give names a shape."""

    text: str
    declarations: dict[str, Shape] = field(default_factory=dict)


class _Parser:
    def __init__(self, text: str, decls: Mapping[str, Shape]):
        self.tokens = tokenize(text)
        self.i = 0
        self.decls = decls

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def advance(self) -> Token:
        t = self.tokens[self.i]
        self.i += 1
        return t

    def expect(self, text: str) -> Token:
        if self.tok.text != text or self.tok.kind == "end":
            raise ExprSyntaxError(f"expected {text!r}, found {self._describe()}", self.tok.pos)
        return self.advance()

    def _describe(self) -> str:
        return "end of input" if self.tok.kind == "end" else repr(self.tok.text)

    def parse(self) -> Expr:
        if self.tok.kind == "end":
            raise ExprSyntaxError("empty expression", 0)
        e = self.expr()
        if self.tok.kind != "end":
            raise ExprSyntaxError(f"unexpected {self._describe()}", self.tok.pos)
        return e

    def expr(self) -> Expr:
        e = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.advance().text
            rhs = self.term()
            e = E.add(e, rhs) if op == "+" else E.sub(e, rhs)
        return e

    def term(self) -> Expr:
        e = self.unary()
        while self.tok.kind == "op" and self.tok.text in ("*", "(*)", "(/)"):
            op = self.advance().text
            rhs = self.unary()
            if op == "*":
                if e.shape.is_vector and rhs.shape.is_vector:
                    raise ShapeMismatch(
                        f"'*' between two vectors at position {self.tokens[self.i - 1].pos}; "
                        "use (*) or dot(...)")
                e = E.mul(e, rhs)
            elif op == "(*)":
                e = E.hadamard(e, rhs)
            else:
                e = E.div(e, rhs)
        return e

    def unary(self) -> Expr:
        if self.tok.kind == "op" and self.tok.text == "-":
            self.advance()
            if self.tok.kind == "num" and self.tokens[self.i + 1].text != "^":
                return E.const(-float(self.advance().text))
            return E.neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.tok.kind == "op" and self.tok.text == "^":
            self.advance()
            sign = 1.0
            if self.tok.kind == "op" and self.tok.text == "-":
                self.advance()
                sign = -1.0
            if self.tok.kind != "num":
                raise ExprSyntaxError(f"expected a number exponent, found {self._describe()}",
                                      self.tok.pos)
            return E.power(base, sign * float(self.advance().text))
        return base

    def atom(self) -> Expr:
        t = self.tok
        if t.kind == "num":
            self.advance()
            return E.const(float(t.text))
        if t.kind == "ident":
            self.advance()
            if self.tok.kind == "op" and self.tok.text == "(":
                return self.call(t)
            if t.text in _FUNCS:
                raise ExprSyntaxError(f"expected '(' after {t.text!r}", self.tok.pos)
            return E.build("var", name=t.text, shape=self.decls.get(t.text, E.SCALAR))
        if t.kind == "op" and t.text == "(":
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        raise ExprSyntaxError(f"unexpected {self._describe()}", t.pos)

    def call(self, name: Token) -> Expr:
        if name.text not in _FUNCS:
            raise UnknownFunction(f"unknown function {name.text!r} at position {name.pos}")
        self.expect("(")
        args = [self.expr()]
        while self.tok.kind == "op" and self.tok.text == ",":
            self.advance()
            args.append(self.expr())
        self.expect(")")
        if len(args) != _FUNCS[name.text]:
            raise ExprSyntaxError(
                f"{name.text} takes {_FUNCS[name.text]} argument(s), got {len(args)}", name.pos)
        return E.build(name.text, args)


def _normalize_decls(decls) -> dict[str, Shape]:
    out = {}
    for name, s in (decls or {}).items():
        out[name] = s if isinstance(s, Shape) else Shape(s)
    return out


def parse(src: SourceExpr | str, decls: Mapping[str, Shape | int | None] | None = None) -> Expr:
    """Parse expression text; undeclared identifiers are scalars."""
    if isinstance(src, SourceExpr):
        text, decls = src.text, src.declarations
    else:
        text = src
    return _Parser(text, _normalize_decls(decls)).parse()


# -- pretty printing --------------------------------------------------------

_INFIX = {"add": "+", "sub": "-", "mul": "*", "hadamard": "(*)", "hdiv": "(/)"}
_PREC = {"add": 1, "sub": 1, "mul": 2, "hadamard": 2, "hdiv": 2, "neg": 3, "pow": 4}


def _prec(e: Expr) -> int:
    if e.kind == "expand":
        return _prec(e.children[0])
    if e.kind == "const" and e.value < 0:
        return 3
    return _PREC.get(e.kind, 5)


def pretty_print(e: Expr) -> str:
    """Render with the minimal parentheses that re-parse to the same tree."""
    k = e.kind
    if k == "var":
        return e.name
    if k == "const":
        return format_number(e.value)
    if k == "constvec":
        return "[" + ", ".join(format_number(v) for v in e.value) + "]"
    if k == "expand":
        return pretty_print(e.children[0])
    if k in _INFIX:
        p = _PREC[k]
        a, b = e.children
        op = _INFIX[k]
        if k == "hadamard" and "expand" in (a.kind, b.kind):
            op = "*"
        left = pretty_print(a)
        if _prec(a) < p:
            left = f"({left})"
        right = pretty_print(b)
        if _prec(b) <= p:
            right = f"({right})"
        return f"{left} {op} {right}"
    if k == "neg":
        (a,) = e.children
        inner = pretty_print(a)
        bare_number = a.kind == "const" and _prec(a) == 5
        if _prec(a) < 3 or bare_number:
            inner = f"({inner})"
        return f"-{inner}"
    if k == "pow":
        (a,) = e.children
        base = pretty_print(a)
        if _prec(a) < 5:
            base = f"({base})"
        return f"{base}^{format_number(e.value)}"
    return f"{k}(" + ", ".join(pretty_print(c) for c in e.children) + ")"
