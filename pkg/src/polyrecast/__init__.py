"""polyrecast: recast hybrid systems with elementary functions (exp, ln,
sin, cos, roots, reciprocals) into polynomial form, verify the recast via
the simulation-map Jacobian identity, validate it numerically, and emit
solver-ready safety-verification artifacts."""

from .expr import (
    Add,
    Constant,
    Cos,
    Div,
    Exp,
    Expr,
    Ln,
    Mul,
    Pow,
    Sin,
    Sub,
    Var,
    cos,
    differentiate,
    evaluate,
    exp,
    is_polynomial,
    ln,
    replace_subterm,
    sin,
    sqrt,
    substitute,
    to_string,
)
from .parser import parse, parse_predicate
from .poly import Poly, to_canonical_poly
from .normalform import canonical, exprs_equal
from .recast import (
    OdeSystem,
    ReplacementLedger,
    SimulationMap,
    close_ledger,
    lie_derivative,
    simulation_condition_check,
    trans_eodes,
    vt,
)

__all__ = [
    "Add", "Constant", "Cos", "Div", "Exp", "Expr", "Ln", "Mul", "Pow",
    "Sin", "Sub", "Var", "cos", "differentiate", "evaluate", "exp",
    "is_polynomial", "ln", "replace_subterm", "sin", "sqrt", "substitute",
    "to_string", "parse", "parse_predicate", "Poly", "to_canonical_poly",
    "canonical", "exprs_equal", "OdeSystem", "ReplacementLedger",
    "SimulationMap", "close_ledger", "lie_derivative",
    "simulation_condition_check", "trans_eodes", "vt",
]

__version__ = "0.1.0"
