"""Expression language: trees, parsing, evaluation, calculus and sampled equality."""

from .calculus import AntiderivativeFn, DependentSymbolError, antiderivative, differentiate, natural_primitive, partial_x
from .evaluate import (
    Bindings,
    DomainError,
    EvaluationError,
    PoleError,
    UnboundSymbolError,
    adaptive_simpson,
    clear_quadrature_cache,
    evaluate,
    lambdify,
)
from .nodes import (
    HALF,
    ONE,
    X,
    Y,
    YP,
    YPP,
    ZERO,
    Add,
    Aux,
    Const,
    Dep,
    Div,
    Expr,
    Float,
    Func,
    Integral,
    Mul,
    Neg,
    Parameter,
    Pow,
    Var,
    add,
    as_expr,
    aux,
    const,
    cos,
    depends_on_x,
    div,
    exp,
    free_symbols,
    func,
    has_dependent,
    integral,
    is_number,
    ln,
    mul,
    neg,
    param,
    parameters,
    power,
    rebuild,
    sin,
    sub,
    substitute,
)
from .parse import ParseError, parse, render
from .sampling import SYMBOLIC_TOL, Comparison, ParamRange, compare_on_domain, equivalent_on_domain

eval_expr = evaluate
