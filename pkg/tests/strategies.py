"""Hypothesis strategies for random expression trees of depth at most 8.

Trees are built top-down with an explicit depth budget, so every draw is
well-shaped and no filtering is needed.
"""

from functools import lru_cache

from hypothesis import strategies as st

from matcalc import expr as E

MAX_DEPTH = 8
VEC_LEN = 2

_numbers = st.one_of(st.integers(-20, 20).map(float),
                     st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False))
_scalar_leaf = st.one_of(st.sampled_from(["x", "y", "z"]).map(E.var), _numbers.map(E.const))

_BINARY = ["add", "sub", "mul", "hadamard", "hdiv"]
_UNARY = ["sin", "cos", "ln", "exp", "max0", "neg"]
_POWERS = [2.0, 3.0, -1.0, 0.5, -2.0]


@lru_cache(maxsize=None)
def _scalar(depth: int):
    if depth <= 1:
        return _scalar_leaf
    sub = st.deferred(lambda: _scalar(depth - 1))
    return st.one_of(
        _scalar_leaf,
        st.tuples(st.sampled_from(_BINARY), sub, sub).map(lambda t: E.build(t[0], t[1:])),
        st.tuples(st.sampled_from(_UNARY), sub).map(lambda t: E.build(t[0], [t[1]])),
        st.tuples(sub, st.sampled_from(_POWERS)).map(lambda t: E.power(*t)),
    )


scalar_exprs = st.integers(1, MAX_DEPTH).flatmap(_scalar)


# mixed scalar/vector trees over vectors u, v (length 2) and scalar s

_vec_leaf = st.sampled_from(["u", "v"]).map(lambda n: E.var(n, VEC_LEN))
_s_leaf = st.just(E.var("s"))


@lru_cache(maxsize=None)
def _vec(depth: int):
    if depth <= 1:
        return _vec_leaf
    vec = st.deferred(lambda: _vec(depth - 1))
    sca = st.deferred(lambda: _mixed_scalar(depth - 1))
    ops = st.sampled_from(["add", "sub", "hadamard", "hdiv"])
    return st.one_of(
        _vec_leaf,
        st.tuples(ops, vec, st.one_of(vec, sca)).map(lambda t: E.elementwise(*t)),
        st.tuples(ops, sca, vec).map(lambda t: E.elementwise(*t)),
        st.tuples(st.sampled_from(["sin", "exp", "neg"]), vec).map(lambda t: E.build(t[0], [t[1]])),
    )


@lru_cache(maxsize=None)
def _mixed_scalar(depth: int):
    if depth <= 1:
        return _s_leaf
    vec = st.deferred(lambda: _vec(depth - 1))
    sca = st.deferred(lambda: _mixed_scalar(depth - 1))
    return st.one_of(
        _s_leaf,
        vec.map(E.vsum),
        st.tuples(vec, vec).map(lambda t: E.dot(*t)),
        st.tuples(st.sampled_from(["add", "mul"]), sca, sca).map(lambda t: E.build(t[0], t[1:])),
    )


vec_exprs = st.integers(1, MAX_DEPTH).flatmap(
    lambda d: st.one_of(_vec(d), _mixed_scalar(d)))


def depth(e) -> int:
    return 1 + max((depth(c) for c in e.children), default=0)
