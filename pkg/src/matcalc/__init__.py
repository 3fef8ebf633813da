"""Symbolic and automatic differentiation of scalar and vector expressions."""

from .canonical import canonical, equivalent
from .differentiator import (
    Jacobian, derive_scalar, detect_diagonal, diff, gradient, jacobian, jacobian_dense,
    scalar_expansion_partials, sum_reduction_grad, total_derivative, transpose_layout,
    vector_chain,
)
from .errors import (
    ArityError, ConflictingShape, CyclicDefinition, Diverged, DimensionMismatch,
    DivisionByZero, DomainError, ExprSyntaxError, MatcalcError, ShapeMismatch,
    UnboundVariable, UnknownFunction,
)
from .evaluator import CheckReport, check, eval_jacobian, evaluate, finite_diff
from .expr import SCALAR, Expr, Shape, free_vars, simplify, substitute
from .parser import SourceExpr, parse, pretty_print
from .tape import Tape, forward_mode, lower, reverse_mode, symbolic_backsub

__all__ = [
    "ArityError", "CheckReport", "ConflictingShape", "CyclicDefinition", "DimensionMismatch",
    "Diverged", "DivisionByZero", "DomainError", "Expr", "ExprSyntaxError", "Jacobian",
    "MatcalcError", "SCALAR", "Shape", "ShapeMismatch", "SourceExpr", "Tape",
    "UnboundVariable", "UnknownFunction", "canonical", "check", "derive_scalar",
    "detect_diagonal", "diff", "equivalent", "eval_jacobian", "evaluate", "finite_diff",
    "forward_mode", "free_vars", "gradient", "jacobian", "jacobian_dense", "lower", "parse",
    "pretty_print", "reverse_mode", "scalar_expansion_partials", "simplify", "substitute",
    "sum_reduction_grad", "symbolic_backsub", "total_derivative", "transpose_layout",
    "vector_chain",
]
