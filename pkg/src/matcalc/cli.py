"""Command-line front end: ``matcalc <command> ...``.

Exit status is 0 on success, 1 when a check fails or training diverges and 2
for usage, parse, shape and I/O errors.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import differentiator as D
from . import neuron as NN
from . import tape as T
from .errors import Diverged, MatcalcError
from .evaluator import check, evaluate
from .expr import Expr, Shape, free_vars
from .parser import parse, pretty_print
from .canonical import canonical


class UsageError(Exception):
    pass


def fmt(v) -> str:
    """12 significant digits; vectors as ``[a, b, c]``."""
    if isinstance(v, np.ndarray):
        return "[" + ", ".join(fmt(float(x)) for x in v) + "]"
    s = f"{float(v):.12g}"
    return "0" if s == "-0" else s


def parse_vec(arg: str) -> tuple[str, int]:
    name, sep, n = arg.partition(":")
    try:
        length = int(n)
    except ValueError:
        length = 0
    if not sep or not name or length < 1:
        raise UsageError(f"bad --vec {arg!r}, expected name:n with n >= 1")
    return name.strip(), length


def parse_bind(arg: str) -> tuple[str, object]:
    name, sep, text = arg.partition("=")
    name, text = name.strip(), text.strip()
    if not sep or not name or not text:
        raise UsageError(f"bad --bind {arg!r}, expected name=value or name=[v1,...]")
    try:
        if text.startswith("["):
            if not text.endswith("]"):
                raise ValueError
            return name, np.array([float(t) for t in text[1:-1].split(",")])
        return name, float(text)
    except ValueError:
        raise UsageError(f"bad value in --bind {arg!r}") from None


def _decls(args) -> dict[str, Shape]:
    decls = {}
    for arg in args.vec or []:
        name, n = parse_vec(arg)
        decls[name] = Shape.vector(n)
    for name, value in _env(args).items():
        if isinstance(value, np.ndarray) and name not in decls:
            decls[name] = Shape.vector(value.size)
    return decls


def _env(args) -> dict:
    return dict(parse_bind(b) for b in getattr(args, "bind", None) or [])


def _exprs(args) -> list[Expr]:
    decls = _decls(args)
    parts = [p for p in args.expr.split(";")]
    return [parse(p, decls) for p in parts]


def _expr(args) -> Expr:
    exprs = _exprs(args)
    if len(exprs) != 1:
        raise UsageError("this command takes a single expression")
    return exprs[0]


def _wrt(args, exprs: list[Expr]) -> list[str]:
    if not args.wrt:
        raise UsageError("--wrt is required")
    names = [w.strip() for w in args.wrt.split(",") if w.strip()]
    known = set(_decls(args))
    for e in exprs:
        known.update(free_vars(e))
    for w in names:
        if w not in known:
            raise UsageError(f"--wrt {w!r} is not a variable of the expression")
    return names


def _wrt_arg(names: list[str], exprs: list[Expr]):
    if len(names) == 1:
        shapes = {}
        for e in exprs:
            shapes.update(free_vars(e))
        return Expr("var", shape=shapes.get(names[0], Shape()), name=names[0])
    return names


# -- commands ---------------------------------------------------------------

def cmd_diff(args) -> int:
    e = _expr(args)
    names = _wrt(args, [e])
    if len(names) != 1:
        raise UsageError("diff takes one --wrt variable; use grad for several")
    print(D.jacobian(e, _wrt_arg(names, [e])).canonical().render())
    return 0


def cmd_grad(args) -> int:
    e = _expr(args)
    if e.shape.is_vector:
        raise UsageError("grad needs a scalar expression; use jacobian")
    names = _wrt(args, [e])
    print(D.gradient(e, _wrt_arg(names, [e])).canonical().render())
    return 0


def cmd_jacobian(args) -> int:
    exprs = _exprs(args)
    names = _wrt(args, exprs)
    target = exprs[0] if len(exprs) == 1 else exprs
    print(D.jacobian(target, _wrt_arg(names, exprs)).canonical().render())
    return 0


def cmd_eval(args) -> int:
    print(fmt(evaluate(_expr(args), _env(args))))
    return 0


def cmd_check(args) -> int:
    e = _expr(args)
    names = _wrt(args, [e])
    report = check(e, _wrt_arg(names, [e]), _env(args), args.tol_abs, args.tol_rel, args.h)
    print(report.render())
    return 0 if report.passed else 1


def cmd_tape(args) -> int:
    e = _expr(args)
    t = T.lower(e)
    print(T.render(t))
    if args.wrt:
        names = _wrt(args, [e])
        for name in names:
            d = T.symbolic_backsub(t, name)
            print(f"d{t.result}/d{name} = {pretty_print(canonical(d))}")
    return 0


def cmd_dot(args) -> int:
    text = T.to_dot(T.lower(_expr(args)))
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_train(args) -> int:
    data = NN.read_csv(args.data) if args.data else NN.make_fixture(args.seed)
    cfg = NN.TrainConfig(args.eta, args.epochs, args.seed, args.fold_bias, args.init_bias)
    try:
        model, trace = NN.train(data, cfg)
    except Diverged as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for k, c in enumerate(trace, start=1):
        print(f"epoch {k} loss {fmt(c)}")
    print(f"w = {fmt(model.w)} b = {fmt(model.b)}")
    return 0


# -- argument parsing -------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="matcalc", description="Vector calculus on expressions.")
    sub = p.add_subparsers(dest="command", required=True)

    def expr_cmd(name, fn, help_text, wrt=False, bind=False):
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("expr", help="expression text; jacobian accepts several separated by ';'")
        sp.add_argument("--vec", action="append", metavar="NAME:N", help="declare a vector")
        if wrt:
            sp.add_argument("--wrt", metavar="A,B", help="differentiation variable(s)")
        if bind:
            sp.add_argument("--bind", action="append", metavar="NAME=V",
                            help="bind a value, name=v or name=[v1,...]")
        sp.set_defaults(func=fn)
        return sp

    expr_cmd("diff", cmd_diff, "symbolic derivative", wrt=True)
    expr_cmd("grad", cmd_grad, "gradient row vector", wrt=True)
    expr_cmd("jacobian", cmd_jacobian, "numerator-layout Jacobian", wrt=True)
    expr_cmd("eval", cmd_eval, "evaluate numerically", bind=True)
    sp = expr_cmd("check", cmd_check, "compare against finite differences", wrt=True, bind=True)
    sp.add_argument("--h", type=float, default=None, help="fixed step (default 1e-6*max(1,|v|))")
    sp.add_argument("--tol-abs", type=float, default=1e-7)
    sp.add_argument("--tol-rel", type=float, default=1e-4)
    expr_cmd("tape", cmd_tape, "intermediate variables with local partials", wrt=True)
    sp = expr_cmd("dot", cmd_dot, "Graphviz DOT of the tape")
    sp.add_argument("-o", "--output", help="output file (default stdout)")

    sp = sub.add_parser("train", help="train a ReLU neuron by gradient descent")
    sp.add_argument("--data", help="CSV with header x1,...,xn,y (default: synthetic fixture)")
    sp.add_argument("--seed", type=int, default=42, help="fixture seed")
    sp.add_argument("--eta", type=float, default=0.05)
    sp.add_argument("--epochs", type=int, default=200)
    sp.add_argument("--fold-bias", action="store_true")
    sp.add_argument("--init-bias", type=float, default=1.0, help="initial bias (weights start at 0)")
    sp.set_defaults(func=cmd_train)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (MatcalcError, UsageError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
