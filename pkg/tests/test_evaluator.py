import math
import zlib

import numpy as np
import pytest

from golden_corpus import CORPUS
from matcalc import differentiator as D
from matcalc import expr as E
from matcalc.errors import DivisionByZero, DomainError, ShapeMismatch, UnboundVariable
from matcalc.evaluator import check, eval_jacobian, evaluate, finite_diff
from matcalc.parser import parse


def test_eval_examples():
    assert evaluate(parse("3*x^2*y"), {"x": 2, "y": 3}) == 36
    e = parse("sum(w (*) x)", {"w": 2, "x": 2})
    assert evaluate(e, {"w": [1, 2], "x": [3, 4]}) == 11
    with pytest.raises(UnboundVariable):
        evaluate(parse("x"), {})


def test_eval_secant_experiment():
    y = parse("x + x^2")
    assert evaluate(y, {"x": 1.0}) == 2.0
    assert evaluate(y, {"x": 2.0}) == 6.0


def test_eval_vector_ops():
    env = {"x": np.array([1.0, -2.0, 3.0]), "z": 2.0}
    np.testing.assert_array_equal(evaluate(parse("max0(x)", {"x": 3}), env), [1, 0, 3])
    np.testing.assert_array_equal(evaluate(parse("x * z", {"x": 3}), env), [2, -4, 6])
    assert evaluate(parse("x_2"), env) == -2.0


def test_eval_errors():
    with pytest.raises(DivisionByZero):
        evaluate(parse("1 (/) x"), {"x": 0.0})
    with pytest.raises(DivisionByZero):
        evaluate(parse("w (/) x", {"w": 2, "x": 2}), {"w": [1, 1], "x": [1, 0]})
    with pytest.raises(DomainError):
        evaluate(parse("ln(x)"), {"x": -1.0})
    with pytest.raises(ShapeMismatch):
        evaluate(parse("sum(x)", {"x": 2}), {"x": [1, 2, 3]})
    with pytest.raises(ShapeMismatch):
        evaluate(parse("x"), {"x": [1, 2]})


def test_eval_jacobian_examples():
    j = D.diagonal([parse("x_1"), parse("x_2")])
    np.testing.assert_array_equal(eval_jacobian(j, {"x": [5, 7]}), [[5, 0], [0, 7]])
    g = D.gradient(parse("3*x^2*y"), ["x", "y"])
    np.testing.assert_array_equal(eval_jacobian(g, {"x": 2, "y": 3}), [[36, 12]])
    np.testing.assert_array_equal(eval_jacobian(D.identity(3), {}), np.eye(3))


def test_finite_diff_examples():
    fd = finite_diff(parse("sin(x^2)"), "x", {"x": 1.0})
    assert abs(fd.grid[0, 0] - 2 * math.cos(1.0)) < 1e-6
    fd = finite_diff(parse("sum(x)", {"x": 3}), "x", {"x": np.array([0.3, -1.2, 4.0])})
    np.testing.assert_allclose(fd.grid, [[1, 1, 1]], atol=1e-8)
    fd = finite_diff(parse("max0(z)"), "z", {"z": 0.0})
    assert fd.near_kink.all()


def test_default_step_scales_with_value():
    fd = finite_diff(parse("x^2"), "x", {"x": 50.0})
    assert fd.steps[0] == pytest.approx(5e-5)
    fd = finite_diff(parse("x^2"), "x", {"x": 0.01})
    assert fd.steps[0] == pytest.approx(1e-6)


def test_central_difference_order():
    e, x0 = parse("sin(x^2)"), 1.0
    exact = 2 * x0 * math.cos(x0 * x0)
    err1 = abs(finite_diff(e, "x", {"x": x0}, h=1e-3).grid[0, 0] - exact)
    err2 = abs(finite_diff(e, "x", {"x": x0}, h=5e-4).grid[0, 0] - exact)
    assert 3.5 < err1 / err2 < 4.5


def test_check_examples():
    r = check(parse("ln(sin(x^3)^2)"), "x", {"x": 0.5})
    assert r.verdict == "pass"
    rng = np.random.default_rng(3)
    e = parse("w (*) x", {"w": 5, "x": 5})
    assert D.jacobian(e, E.var("w", 5)).rep == "diagonal"
    r = check(e, E.var("w", 5), {"w": rng.normal(size=5), "x": rng.normal(size=5)})
    assert r.passed and r.entries and len(r.entries) == 25
    r = check(parse("max0(z)"), "z", {"z": 0.0})
    assert r.verdict == "pass-with-skips" and r.skipped == [(0, 0)]


def test_check_detects_wrong_derivative(monkeypatch):
    wrong = D.Jacobian(1, 1, "scalar", (parse("3 * x"),))
    monkeypatch.setattr(D, "jacobian", lambda e, v: wrong)
    r = check(parse("x^2"), "x", {"x": 1.0})
    assert r.verdict == "fail" and not r.passed
    assert "verdict: fail" in r.render()


def test_report_render_is_a_table():
    text = check(parse("x*y"), ["x", "y"], {"x": 2.0, "y": 3.0}).render()
    lines = text.splitlines()
    assert lines[0].startswith("entry")
    assert lines[-1] == "verdict: pass"


@pytest.mark.parametrize("g", CORPUS, ids=lambda g: g.name)
def test_golden_against_oracle(g):
    rng = np.random.default_rng(zlib.crc32(g.name.encode()))
    for _ in range(20):
        r = check(g.target(), g.wrt_arg(), g.random_env(rng))
        assert r.passed, r.render()
