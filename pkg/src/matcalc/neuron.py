"""A single ReLU neuron: closed-form gradients of the MSE loss and a trainer."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import expr as E
from .errors import Diverged, MatcalcError, ShapeMismatch
from .expr import Expr


@dataclass(frozen=True)
class NeuronModel:
    w: np.ndarray
    b: float

    def __post_init__(self):
        w = np.atleast_1d(np.asarray(self.w, dtype=np.float64))
        if w.ndim != 1 or w.size < 1:
            raise ShapeMismatch("weights must be a non-empty vector")
        if not (np.all(np.isfinite(w)) and np.isfinite(self.b)):
            raise ValueError("model parameters must be finite")
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "b", float(self.b))

    @property
    def n(self) -> int:
        return self.w.size

    def __eq__(self, other):
        return (isinstance(other, NeuronModel) and np.array_equal(self.w, other.w)
                and self.b == other.b)


@dataclass(frozen=True)
class Dataset:
    X: np.ndarray  # N x n
    y: np.ndarray  # N

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        y = np.asarray(self.y, dtype=np.float64)
        if X.ndim != 2 or X.shape[0] < 1:
            raise ShapeMismatch("X must be a non-empty N x n array")
        if y.shape != (X.shape[0],):
            raise ShapeMismatch(f"{X.shape[0]} inputs but {y.size} targets")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def N(self) -> int:
        return self.X.shape[0]

    @property
    def n(self) -> int:
        return self.X.shape[1]


@dataclass(frozen=True)
class TrainConfig:
    eta: float
    epochs: int
    seed: int = 42
    fold_bias: bool = False
    # b = 0 puts every sample exactly on the kink at w = 0, where the gradient
    # is zero and training never starts; see init_model.
    init_bias: float = 1.0

    def __post_init__(self):
        if not self.eta > 0:
            raise ValueError(f"learning rate must be positive, got {self.eta}")
        if self.epochs < 0:
            raise ValueError(f"epochs must be non-negative, got {self.epochs}")


def _check(m: NeuronModel, n: int):
    if m.n != n:
        raise ShapeMismatch(f"model has {m.n} weights but inputs have length {n}")


def affine(m: NeuronModel, x) -> float:
    x = np.asarray(x, dtype=np.float64)
    _check(m, x.size)
    return float(m.w @ x + m.b)


def activation(m: NeuronModel, x) -> float:
    return max(0.0, affine(m, x))


def activation_grad(m: NeuronModel, x) -> tuple[np.ndarray, float]:
    """(d act/dw, d act/db); z = 0 counts as inactive."""
    x = np.asarray(x, dtype=np.float64)
    if affine(m, x) > 0:
        return x.copy(), 1.0
    return np.zeros(m.n), 0.0


def _z(m: NeuronModel, d: Dataset) -> np.ndarray:
    _check(m, d.n)
    return d.X @ m.w + m.b


def loss(m: NeuronModel, d: Dataset) -> float:
    r = d.y - np.maximum(0.0, _z(m, d))
    return float(np.mean(r * r))


def _affine_grad(X_hat: np.ndarray, w_hat: np.ndarray, y: np.ndarray) -> np.ndarray:
    z = X_hat @ w_hat
    e = np.where(z > 0, z - y, 0.0)
    return (2.0 / y.size) * (e @ X_hat)


def loss_gradients(m: NeuronModel, d: Dataset) -> tuple[np.ndarray, float]:
    """(dC/dw, dC/db) with the active/inactive split applied per sample.

    Computed on the augmented inputs, so the result is bit-for-bit the
    gradient of the folded problem.
    """
    _check(m, d.n)
    g = _affine_grad(augment_input(d.X), fold_bias(m), d.y)
    return g[:-1], float(g[-1])


def sgd_step(m: NeuronModel, d: Dataset, eta: float) -> NeuronModel:
    if not eta > 0:
        raise ValueError(f"learning rate must be positive, got {eta}")
    gw, gb = loss_gradients(m, d)
    return NeuronModel(m.w - eta * gw, m.b - eta * gb)


# -- bias folding -----------------------------------------------------------

def fold_bias(m: NeuronModel) -> np.ndarray:
    return np.append(m.w, m.b)


def augment_input(x) -> np.ndarray:
    """Append a 1 to one input vector, or a column of ones to an N x n matrix."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        return np.append(x, 1.0)
    return np.hstack([x, np.ones((x.shape[0], 1))])


def unfold_bias(w_hat) -> NeuronModel:
    w_hat = np.asarray(w_hat, dtype=np.float64)
    return NeuronModel(w_hat[:-1], float(w_hat[-1]))


def augment_dataset(d: Dataset) -> Dataset:
    return Dataset(augment_input(d.X), d.y)


def folded_loss_gradient(w_hat, d: Dataset) -> np.ndarray:
    """dC/dw_hat for the bias-free neuron on augmented inputs."""
    return _affine_grad(augment_input(d.X), np.asarray(w_hat, dtype=np.float64), d.y)


# -- training ---------------------------------------------------------------

def init_model(n: int, cfg: TrainConfig) -> NeuronModel:
    return NeuronModel(np.zeros(n), cfg.init_bias)


def train(d: Dataset, cfg: TrainConfig) -> tuple[NeuronModel, list[float]]:
    """Full-batch gradient descent; the trace holds the loss after each step.

    With ``fold_bias`` the augmented weights are trained on augmented inputs
    and the unfolded model is returned.
    """
    m = init_model(d.n, cfg)
    trace: list[float] = []
    X_hat = augment_input(d.X)
    w_hat = fold_bias(m)
    with np.errstate(over="ignore", invalid="ignore"):
        for epoch in range(1, cfg.epochs + 1):
            if cfg.fold_bias:
                w_hat = w_hat - cfg.eta * folded_loss_gradient(w_hat, d)
                trace.append(_guarded_loss(X_hat, w_hat, d.y, epoch))
            else:
                gw, gb = loss_gradients(unfold_bias(w_hat), d)
                w, b = w_hat[:-1] - cfg.eta * gw, w_hat[-1] - cfg.eta * gb
                trace.append(_guarded_loss(d.X, w, d.y, epoch, b))
                w_hat = np.append(w, b)
    return unfold_bias(w_hat), trace


def _guarded_loss(X, w, y, epoch: int, b: float = 0.0) -> float:
    r = y - np.maximum(0.0, X @ w + b)
    c = float(np.mean(r * r))
    if not np.isfinite(c):
        raise Diverged(epoch, c)
    return c


# -- fixtures and files -----------------------------------------------------

W_STAR = np.array([1.0, -0.5, 2.0])
B_STAR = 0.5


def make_fixture(seed: int = 42, n_samples: int = 32) -> Dataset:
    """Targets are exactly w*.x + b*, and every activation is positive."""
    rng = np.random.default_rng(seed)
    X = rng.uniform(0.5, 1.5, size=(n_samples, W_STAR.size))
    return Dataset(X, X @ W_STAR + B_STAR)


class CsvError(MatcalcError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


def read_csv(path: str | Path) -> Dataset:
    """Read a header ``x1,...,xn,y`` and one sample per row."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise CsvError("empty file, expected a header x1,...,xn,y", 1)
    header = [h.strip() for h in rows[0]]
    n = len(header) - 1
    if n < 1 or header != [f"x{i}" for i in range(1, n + 1)] + ["y"]:
        raise CsvError(f"bad header {','.join(header)!r}, expected x1,...,xn,y", 1)
    X, y = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != n + 1:
            raise CsvError(f"expected {n + 1} fields, found {len(row)}", lineno)
        try:
            vals = [float(c) for c in row]
        except ValueError:
            bad = next(c for c in row if not _is_float(c))
            raise CsvError(f"non-numeric field {bad.strip()!r}", lineno) from None
        X.append(vals[:-1])
        y.append(vals[-1])
    if not X:
        raise CsvError("no samples", len(rows))
    return Dataset(np.array(X), np.array(y))


def _is_float(s: str) -> bool:
    try:
        float(s)
        return True
    except ValueError:
        return False


def write_csv(d: Dataset, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow([f"x{i}" for i in range(1, d.n + 1)] + ["y"])
        for x, t in zip(d.X, d.y):
            out.writerow([repr(float(v)) for v in x] + [repr(float(t))])


# -- the loss as an expression ----------------------------------------------

def loss_expression(d: Dataset, w: str = "w", b: str = "b") -> Expr:
    """The MSE loss over ``d`` as a tree in variables ``w`` (vector) and ``b``."""
    wv = E.var(w, d.n)
    bv = E.var(b)
    terms = []
    for x, t in zip(d.X, d.y):
        z = E.add(E.dot(wv, E.constvec(x.tolist())), bv)
        terms.append(E.power(E.sub(E.const(float(t)), E.call("max0", z)), 2.0))
    return E.mul(E.const(1.0 / d.N), E.total(terms))
