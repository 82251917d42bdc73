"""streamcalc: stream differential equations, exactly.

Parse a small DSL of stream differential equations, classify the
specification format, compute stream prefixes by lazy coinductive
evaluation over exact coefficient algebras, emit closed-form rational
expressions for linear systems, and decide or semi-decide stream
equivalence by bisimulation techniques.
"""

from .algebra import (
    Algebra,
    Poly,
    RatExpr,
    format_poly,
    format_ratexpr,
    gauss_solve,
    get_algebra,
    gf,
    integers,
    poly_arith,
    poly_gcd,
    rationals,
    ratexpr_derivative,
    ratexpr_head,
    ratexpr_normalize,
)
from .errors import (
    AlgebraMismatch,
    ArityMismatch,
    BudgetExhausted,
    DenominatorHeadZero,
    EvenDenominator,
    GsosViolation,
    HeadNotInvertible,
    MissingInitialValue,
    NoExactSqrt,
    NonProductive,
    NotZeroConsistent,
    SingularMatrix,
    SpecError,
    SpecSyntaxError,
    StreamCalcError,
    UnknownSymbol,
    UnorderedAlgebra,
    UnsupportedOp,
)
from .speclang import Kind, classify, parse, parse_term, validate_gsos
from .stream import StepBudget, Stream, bounded_eq, cons, take

__version__ = "0.1.0"

__all__ = [
    "Algebra", "Poly", "RatExpr", "StepBudget", "Stream", "Kind",
    "bounded_eq", "classify", "cons", "format_poly", "format_ratexpr",
    "gauss_solve", "get_algebra", "gf", "integers", "parse", "parse_term",
    "poly_arith", "poly_gcd", "rationals", "ratexpr_derivative", "ratexpr_head",
    "ratexpr_normalize", "take", "validate_gsos",
    "AlgebraMismatch", "ArityMismatch", "BudgetExhausted",
    "DenominatorHeadZero", "EvenDenominator", "GsosViolation",
    "HeadNotInvertible",
    "MissingInitialValue", "NoExactSqrt", "NonProductive",
    "NotZeroConsistent", "SingularMatrix", "SpecError", "SpecSyntaxError",
    "StreamCalcError", "UnknownSymbol", "UnorderedAlgebra", "UnsupportedOp",
]
