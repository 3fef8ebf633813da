import numpy as np
import pytest

from golden_corpus import CORPUS
from matcalc import differentiator as D
from matcalc import expr as E
from matcalc.canonical import canonical
from matcalc.errors import CyclicDefinition, DimensionMismatch
from matcalc.evaluator import eval_jacobian, evaluate
from matcalc.expr import Shape
from matcalc.parser import parse, pretty_print

V3 = {"w": 3, "x": 3}


def _canon(j):
    return j.canonical().render()


@pytest.mark.parametrize("g", CORPUS, ids=lambda g: g.name)
def test_golden(g):
    j = D.jacobian(g.target(), g.wrt_arg()).canonical()
    assert j.rep == g.rep
    exp = g.expected_exprs()
    if g.rep == "dense":
        assert [list(r) for r in j.data] == [[canonical(e) for e in r] for r in exp]
    else:
        assert list(j.data) == [canonical(e) for e in exp]


def test_derive_scalar_examples():
    assert str(canonical(D.derive_scalar(parse("9*(x + x^2)"), "x"))) == "9 + 18 * x"
    assert str(canonical(D.derive_scalar(parse("3*x^2*y"), "x"))) == "6 * y * x"
    assert D.derive_scalar(parse("99"), "x") == E.const(0.0)


def test_derive_scalar_on_component():
    e = parse("dot(w, x)", V3)
    assert str(D.derive_scalar(e, "w_2")) == "x_2"


def test_shape_law():
    e = parse("sin(w) * z", {"w": 4})
    assert (D.jacobian(e, E.var("w", 4)).rows, D.jacobian(e, E.var("w", 4)).cols) == (4, 4)
    assert (D.jacobian(e, E.var("z")).rows, D.jacobian(e, E.var("z")).cols) == (4, 1)
    s = parse("dot(w, w)", {"w": 4})
    assert (D.jacobian(s, E.var("w", 4)).rows, D.jacobian(s, E.var("w", 4)).cols) == (1, 4)


def test_detect_diagonal_refuses_cross_terms():
    w, x = E.var("w", 3), E.var("x", 3)
    e = E.hadamard(E.expand(E.vsum(w), 3), x)
    assert D.detect_diagonal(e, w) is None
    j = D.jacobian(e, w)
    assert j.rep == "dense"
    rng = np.random.default_rng(0)
    for _ in range(10):
        env = {"w": rng.normal(size=3), "x": rng.normal(size=3)}
        expected = np.outer(env["x"], np.ones(3))
        np.testing.assert_allclose(eval_jacobian(j, env), expected, atol=1e-12)


def test_detect_diagonal_through_unaries():
    e = parse("sin(w) (*) exp(x)", V3)
    j = D.detect_diagonal(e, E.var("w", 3))
    assert j is not None and j.rep == "diagonal"
    assert pretty_print(canonical(j.data[0])) == "cos(w_1) * exp(x_1)"


def test_scalar_expansion_and_sum_helpers():
    e = parse("x + z", {"x": 3})
    assert _canon(D.scalar_expansion_partials(e, "z")) == "[ 1 ]\n[ 1 ]\n[ 1 ]"
    s = parse("sum(x * z)", {"x": 3})
    assert _canon(D.sum_reduction_grad(s, E.var("x", 3))) == "[z, z, z]"
    assert _canon(D.sum_reduction_grad(s, "z")) == "sum(x)"


def test_materialize_diagonal():
    j = D.jacobian(parse("w (*) x", V3), E.var("w", 3))
    m = j.materialize()
    assert m.rep == "dense" and m.entry(0, 1) == E.const(0.0)
    env = {"w": np.array([1.0, 2, 3]), "x": np.array([4.0, 5, 6])}
    np.testing.assert_array_equal(eval_jacobian(j, env), eval_jacobian(m, env))


def test_vector_chain_worked_example():
    x = E.var("x")
    g = [parse("x^2"), parse("3*x")]
    f = [parse("ln(g1)"), parse("sin(g2)")]
    jf = D.jacobian_dense(f, ["g1", "g2"])
    jg = D.jacobian(g, x)
    chained = D.vector_chain(jf, jg)
    out = D.substitute_jacobian(chained, {"g1": g[0], "g2": g[1]}).canonical()
    assert out.rep == "col"
    assert [pretty_print(e) for e in out.data] == ["2 (/) x", "3 * cos(3 * x)"]


def test_vector_chain_diagonal_and_row():
    a = D.diagonal([parse("a1"), parse("a2")])
    b = D.diagonal([parse("b1"), parse("b2")])
    assert _canon(D.vector_chain(a, b)) == "diag(b1 * a1, b2 * a2)"
    ones = D.Jacobian(1, 3, "row", tuple(E.const(1.0) for _ in range(3)))
    dx = D.jacobian(parse("w (*) x", V3), E.var("w", 3))
    assert _canon(D.vector_chain(ones, dx)) == "[x_1, x_2, x_3]"
    with pytest.raises(DimensionMismatch):
        D.vector_chain(ones, a)


def test_vector_chain_matches_composition():
    rng = np.random.default_rng(1)
    w = E.var("w", 3)
    g = parse("sin(w) + w (*) w", {"w": 3})
    f = parse("exp(u) (*) u", {"u": 3})
    jf = D.jacobian(f, E.var("u", 3))
    jg = D.jacobian(g, w)
    chained = D.vector_chain(jf, jg)
    composed = D.jacobian(E.substitute(f, {"u": g}), w)
    for _ in range(10):
        wv = rng.normal(size=3)
        gv = evaluate(g, {"w": wv})
        lhs = eval_jacobian(chained, {"w": wv, "u": gv})
        np.testing.assert_allclose(lhs, eval_jacobian(composed, {"w": wv}), rtol=1e-10)


def test_total_derivative_examples():
    x2 = parse("x^2")
    assert str(canonical(D.total_derivative(parse("x + u1"), "x", [("u1", x2)]))) == "1 + 2 * x"
    assert str(canonical(D.total_derivative(parse("x * u1"), "x", [("u1", x2)]))) == "3 * x^2"
    steps = [("u1", x2), ("u2", parse("x + u1")), ("u3", parse("sin(u2)"))]
    got = canonical(D.total_derivative(parse("u3"), "x", steps))
    assert got == canonical(parse("cos(x + x^2) * (1 + 2*x)"))


def test_total_derivative_rejects_cycles():
    with pytest.raises(CyclicDefinition):
        D.total_derivative(parse("u1"), "x", [("u1", parse("u2 + x")), ("u2", parse("x"))])


def test_transpose_layout():
    j = D.jacobian([parse("3*x^2*y"), parse("2*x + y^8")], ["x", "y"]).canonical()
    t = D.transpose_layout(j)
    assert t.layout == D.DENOMINATOR
    assert [[pretty_print(e) for e in r] for r in t.grid()] == [
        ["6 * y * x", "2"], ["3 * x^2", "8 * y^7"]]
    assert D.transpose_layout(t) == j
    eye = D.identity(3)
    assert D.transpose_layout(eye).data == eye.data


def test_jacobian_rejects_inconsistent_reps():
    with pytest.raises(DimensionMismatch):
        D.Jacobian(2, 3, "diagonal", (E.const(1.0),) * 2)


def test_max0_derivative_uses_step():
    d = D.derive_scalar(parse("max0(x)"), "x")
    assert evaluate(d, {"x": 0.0}) == 0.0
    assert evaluate(d, {"x": 2.0}) == 1.0
    assert evaluate(d, {"x": -2.0}) == 0.0
