import subprocess
import sys

import pytest

from matcalc.cli import fmt, main
from matcalc.neuron import make_fixture, write_csv


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_diff(capsys):
    assert run(capsys, "diff", "sin(x^2)", "--wrt", "x") == (0, "2 * x * cos(x^2)\n", "")


def test_grad(capsys):
    assert run(capsys, "grad", "3*x^2*y", "--wrt", "x,y")[1] == "[6 * y * x, 3 * x^2]\n"


def test_jacobian_diagonal(capsys):
    code, out, _ = run(capsys, "jacobian", "w (*) x", "--vec", "w:3", "--vec", "x:3", "--wrt", "w")
    assert (code, out) == (0, "diag(x_1, x_2, x_3)\n")


def test_jacobian_grid(capsys):
    code, out, _ = run(capsys, "jacobian", "3*x^2*y; 2*x + y^8", "--wrt", "x,y")
    assert out == "[ 6 * y * x  3 * x^2 ]\n[ 2          8 * y^7 ]\n"


def test_eval(capsys):
    assert run(capsys, "eval", "3*x^2*y", "--bind", "x=2", "--bind", "y=3")[1] == "36\n"
    out = run(capsys, "eval", "w (*) x", "--bind", "w=[1,2]", "--bind", "x=[3,4]")[1]
    assert out == "[3, 8]\n"
    assert run(capsys, "eval", "1 (/) 3")[1] == "0.333333333333\n"


def test_check_pass_and_fail(capsys, monkeypatch):
    code, out, _ = run(capsys, "check", "ln(sin(x^3)^2)", "--wrt", "x", "--bind", "x=0.5")
    assert code == 0 and out.rstrip().endswith("verdict: pass")
    code, out, _ = run(capsys, "check", "x^2", "--wrt", "x", "--bind", "x=1", "--tol-abs", "0",
                       "--tol-rel", "1e-30", "--h", "0.1")
    assert code == 1 and "verdict: fail" in out


def test_tape(capsys):
    code, out, _ = run(capsys, "tape", "ln(sin(x^3)^2)")
    lines = out.splitlines()
    assert code == 0 and len(lines) == 4
    assert lines[2] == "u3 = u2^2   ∂u3/∂u2 = 2 * u2"
    out = run(capsys, "tape", "ln(sin(x^3)^2)", "--wrt", "x")[1]
    assert out.splitlines()[-1] == "du4/dx = 6 * x^2 * cos(x^3) (/) sin(x^3)"


def test_dot(capsys, tmp_path):
    path = tmp_path / "g.dot"
    assert run(capsys, "dot", "x + x^2", "-o", str(path))[0] == 0
    text = path.read_text()
    assert text.startswith("digraph") and text.count('"x" ->') == 2
    code, _, err = run(capsys, "dot", "")
    assert code == 2 and "empty expression" in err


def test_dot_io_error(capsys, tmp_path):
    code, _, err = run(capsys, "dot", "x", "-o", str(tmp_path / "missing" / "g.dot"))
    assert code == 2 and err


def test_usage_errors(capsys):
    assert run(capsys, "diff", "x +", "--wrt", "x")[0] == 2
    assert run(capsys, "diff", "x", "--wrt", "q")[0] == 2
    assert run(capsys, "diff", "x")[0] == 2
    assert run(capsys, "eval", "x", "--bind", "x=abc")[0] == 2
    assert run(capsys, "eval", "x")[0] == 2
    assert run(capsys, "eval", "x * y", "--vec", "x:2", "--vec", "y:2")[0] == 2
    assert run(capsys, "jacobian", "x", "--vec", "x:0", "--wrt", "x")[0] == 2


def test_train_fixture(capsys):
    code, out, _ = run(capsys, "train", "--seed", "42", "--eta", "0.05", "--epochs", "3")
    lines = out.splitlines()
    assert code == 0 and len(lines) == 4
    assert lines[0].startswith("epoch 1 loss ")
    assert lines[-1].startswith("w = [") and " b = " in lines[-1]


def test_train_from_csv(capsys, tmp_path):
    p = tmp_path / "d.csv"
    write_csv(make_fixture(seed=1, n_samples=4), p)
    code, out, _ = run(capsys, "train", "--data", str(p), "--epochs", "0")
    assert (code, out) == (0, "w = [0, 0, 0] b = 1\n")
    bad = tmp_path / "bad.csv"
    bad.write_text("x1,y\n1,2\n3\n")
    code, _, err = run(capsys, "train", "--data", str(bad))
    assert code == 2 and "line 3" in err


def test_train_divergence_exit_code(capsys, tmp_path):
    p = tmp_path / "huge.csv"
    p.write_text("x1,y\n1e200,1e200\n")
    code, _, err = run(capsys, "train", "--data", str(p), "--eta", "1", "--epochs", "5")
    assert code == 1 and "epoch 1" in err


def test_deterministic(capsys):
    a = run(capsys, "train", "--epochs", "20")
    b = run(capsys, "train", "--epochs", "20")
    assert a == b


def test_fmt():
    assert fmt(2.0) == "2" and fmt(-0.0) == "0" and fmt(1 / 3) == "0.333333333333"


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "matcalc.cli", "eval", "2*3"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout == "6\n"
