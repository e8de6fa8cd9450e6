"""Symbolic differentiation and antiderivatives."""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Mapping

from .evaluate import Bindings, DomainError, PoleError, compile_expr, evaluate, quadrature_primitive
from .nodes import (
    ONE,
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
    X,
    add,
    as_expr,
    aux,
    const,
    cos,
    depends_on_x,
    div,
    has_dependent,
    integral,
    is_number,
    ln,
    mul,
    neg,
    parameters,
    power,
    sin,
    substitute,
)


class DependentSymbolError(ValueError):
    """Total x-derivative requested for an expression containing y or y'."""


_WRT_NAMES = {"x": X, "y": Dep(0), "y'": Dep(1), "y''": Dep(2), "yp": Dep(1), "ypp": Dep(2)}


def _as_symbol(wrt) -> Expr:
    if isinstance(wrt, (Var, Dep, Parameter)):
        return wrt
    if isinstance(wrt, str):
        if wrt in _WRT_NAMES:
            return _WRT_NAMES[wrt]
        return Parameter(wrt)
    raise TypeError(f"cannot differentiate with respect to {wrt!r}")


def differentiate(e, wrt, *, partial: bool = False) -> Expr:
    """Exact derivative of ``e`` with respect to x, y, y', y'' or a parameter.

    Dependent symbols are independent slots when ``wrt`` is one of them.
    With ``wrt='x'`` a tree containing y-symbols is rejected unless
    ``partial=True``, in which case they are held fixed (the explicit
    x-dependence only).  Auxiliary functions always follow x.
    """
    e = as_expr(e)
    s = _as_symbol(wrt)
    return _d(e, s, partial)


def partial_x(e) -> Expr:
    return differentiate(e, "x", partial=True)


def _d(e: Expr, s: Expr, partial: bool) -> Expr:
    if isinstance(e, (Const, Float)):
        return ZERO
    if isinstance(e, Var):
        return ONE if isinstance(s, Var) else ZERO
    if isinstance(e, Dep):
        if e == s:
            return ONE
        if isinstance(s, Var) and not partial:
            raise DependentSymbolError(
                "total x-derivative of an expression in y, y' is not defined here; "
                "use partial=True or a total derivative along a path"
            )
        return ZERO
    if isinstance(e, Parameter):
        return ONE if e == s else ZERO
    if isinstance(e, Aux):
        return aux(e.name, e.order + 1) if isinstance(s, Var) else ZERO
    if isinstance(e, Add):
        return add(*(_d(t, s, partial) for t in e.terms))
    if isinstance(e, Mul):
        terms = []
        for i, f in enumerate(e.factors):
            df = _d(f, s, partial)
            if df != ZERO:
                terms.append(mul(*e.factors[:i], df, *e.factors[i + 1:]))
        return add(*terms)
    if isinstance(e, Neg):
        return neg(_d(e.arg, s, partial))
    if isinstance(e, Div):
        dn, dd = _d(e.num, s, partial), _d(e.den, s, partial)
        if dd == ZERO:
            return div(dn, e.den)
        tail = div(mul(e.num, dd), power(e.den, 2))
        if dn == ZERO:
            return neg(tail)
        return add(div(dn, e.den), neg(tail))
    if isinstance(e, Pow):
        db, de = _d(e.base, s, partial), _d(e.exponent, s, partial)
        if de == ZERO:
            if db == ZERO:
                return ZERO
            return mul(e.exponent, power(e.base, add(e.exponent, -1)), db)
        log_term = mul(de, ln(e.base))
        if db == ZERO:
            return mul(e, log_term)
        return mul(e, add(log_term, div(mul(e.exponent, db), e.base)))
    if isinstance(e, Func):
        da = _d(e.arg, s, partial)
        if da == ZERO:
            return ZERO
        if e.name == "exp":
            return mul(e, da)
        if e.name == "ln":
            return div(da, e.arg)
        if e.name == "sin":
            return mul(cos(e.arg), da)
        return neg(mul(sin(e.arg), da))
    if isinstance(e, Integral):
        if isinstance(s, Var):
            return e.integrand
        if isinstance(s, Parameter):
            return integral(_d(e.integrand, s, partial), e.anchor)
        return ZERO
    raise TypeError(f"cannot differentiate node {e!r}")


# ---------------------------------------------------------------------------
# antiderivatives

def _x_free(e: Expr) -> bool:
    return not depends_on_x(e) and not has_dependent(e)


def _sign_at(e: Expr, x0) -> int | None:
    try:
        v = evaluate(e, x=float(x0))
    except (DomainError, KeyError):
        return None
    if v == 0:
        return None
    return 1 if v > 0 else -1


def _log_of(u: Expr, anchor) -> Expr | None:
    s = _sign_at(u, anchor)
    if s is None:
        return None
    return ln(u if s > 0 else neg(u))


def _log_derivative_coefficient(num: Expr, den: Expr, anchor) -> Fraction | None:
    """c such that num == c * den' (param-free only), else None."""
    if parameters(num) or parameters(den):
        return None
    dden = differentiate(den, "x")
    a = float(anchor)
    ratios = []
    for k in (1, 2, 3, 5, 8):
        t = a + 0.0137 * k
        try:
            n, d = evaluate(num, x=t), evaluate(dden, x=t)
        except DomainError:
            return None
        if d == 0:
            return None
        ratios.append(n / d)
    r0 = ratios[0]
    if any(abs(r - r0) > 1e-12 * max(1.0, abs(r0)) for r in ratios):
        return None
    c = Fraction(r0).limit_denominator(1000)
    if abs(float(c) - r0) > 1e-12 * max(1.0, abs(r0)):
        return None
    return c


def natural_primitive(e, anchor=1) -> Expr | None:
    """Closed-form primitive from the built-in table, or ``None``.

    Recognized shapes: x-free terms, ``c*x^n`` with numeric n (``c/x`` gives
    ``c*ln(x)``), sums of those, and logarithmic derivatives ``c*g'/g`` of
    parameter-free ``g``.  Logarithm arguments take the sign they have at
    ``anchor``.
    """
    e = as_expr(e)
    if has_dependent(e):
        raise ValueError("antiderivative integrand must depend only on x and parameters")
    return _primitive(e, anchor)


def _primitive(e: Expr, anchor) -> Expr | None:
    if _x_free(e):
        return mul(e, X)
    if isinstance(e, Var):
        return mul(Const(Fraction(1, 2)), power(X, 2))
    if isinstance(e, Neg):
        p = _primitive(e.arg, anchor)
        return None if p is None else neg(p)
    if isinstance(e, Add):
        parts = [_primitive(t, anchor) for t in e.terms]
        return None if any(p is None for p in parts) else add(*parts)
    if isinstance(e, Mul):
        free = [f for f in e.factors if _x_free(f)]
        dep = [f for f in e.factors if not _x_free(f)]
        if len(dep) != 1:
            return None
        p = _primitive(dep[0], anchor)
        return None if p is None else mul(*free, p)
    if isinstance(e, Pow) and isinstance(e.base, Var) and is_number(e.exponent):
        n = e.exponent.value
        if n == -1:
            return _log_of(X, anchor)
        return div(power(X, n + 1), const(n + 1))
    if isinstance(e, Div):
        if _x_free(e.num):
            den = e.den
            if isinstance(den, Var):
                lg = _log_of(X, anchor)
                return None if lg is None else mul(e.num, lg)
            if isinstance(den, Pow) and isinstance(den.base, Var) and is_number(den.exponent):
                p = _primitive(power(X, neg(den.exponent)), anchor)
                return None if p is None else mul(e.num, p)
        c = _log_derivative_coefficient(e.num, e.den, anchor)
        if c is not None:
            lg = _log_of(e.den, anchor)
            return None if lg is None else mul(Const(c), lg)
    return None


def _pole_sentinels(e: Expr) -> list[Expr]:
    """Subexpressions whose sign change marks a pole of ``e``."""
    out = []
    for node in e.walk():
        if isinstance(node, Div):
            out.append(node.den)
        elif isinstance(node, Pow) and is_number(node.exponent) and node.exponent.value < 0:
            out.append(node.base)
        elif isinstance(node, Func) and node.name == "ln":
            out.append(node.arg)
    return out


class AntiderivativeFn:
    """F with F(anchor) = 0 and F' = integrand.

    Uses the closed-form table when the integrand is recognized and cached
    adaptive Simpson quadrature otherwise; :meth:`quadrature` always takes
    the numeric path (used to cross-check the table).
    """

    SCAN_POINTS = 64

    def __init__(self, integrand, anchor):
        self.integrand = as_expr(integrand)
        if has_dependent(self.integrand):
            raise ValueError("antiderivative integrand must depend only on x and parameters")
        self.anchor = anchor
        self.primitive = _primitive(self.integrand, anchor)
        if self.primitive is not None:
            at_anchor = substitute(self.primitive, {"x": const(anchor) if not isinstance(anchor, float) else anchor})
            self.closed_form = add(self.primitive, neg(at_anchor))
        else:
            self.closed_form = None
        self._sentinels = _pole_sentinels(self.integrand)

    @property
    def expr(self) -> Expr:
        if self.closed_form is not None:
            return self.closed_form
        return integral(self.integrand, const(self.anchor) if not isinstance(self.anchor, float) else Float(self.anchor))

    def _scan(self, x: float, params: Mapping[str, float]):
        a = float(self.anchor)
        b = Bindings(params=dict(params))
        n = self.SCAN_POINTS
        fns = [compile_expr(s) for s in self._sentinels]
        prev = [None] * len(fns)
        f = compile_expr(self.integrand)
        for i in range(n + 1):
            t = a + (x - a) * i / n
            bt = b.at(t)
            try:
                v = f(bt)
                if not math.isfinite(v):
                    raise DomainError("non-finite integrand")
                signs = [math.copysign(1.0, g(bt)) if g(bt) != 0 else 0.0 for g in fns]
            except (DomainError, ZeroDivisionError, OverflowError) as exc:
                raise PoleError(f"integrand pole inside [{a!r}, {x!r}] near x={t!r}: {exc}") from None
            for j, s in enumerate(signs):
                if s == 0.0 or (prev[j] is not None and s != prev[j]):
                    raise PoleError(f"integrand pole inside [{a!r}, {x!r}] near x={t!r}")
                prev[j] = s

    def __call__(self, x: float, params: Mapping[str, float] | None = None) -> float:
        params = dict(params or {})
        self._scan(float(x), params)
        if self.closed_form is None:
            return self.quadrature(x, params)
        try:
            return evaluate(self.closed_form, params, x=float(x))
        except DomainError as exc:
            raise PoleError(f"closed-form primitive undefined at x={x!r}: {exc}") from None

    def quadrature(self, x: float, params: Mapping[str, float] | None = None) -> float:
        params = dict(params or {})
        names = sorted(parameters(self.integrand))
        missing = [n for n in names if n not in params]
        if missing:
            raise KeyError(f"unbound parameters {missing}")
        pv = tuple((n, float(params[n])) for n in names)
        return quadrature_primitive(self.integrand, float(self.anchor), pv, float(x))


def antiderivative(e, anchor) -> AntiderivativeFn:
    return AntiderivativeFn(e, anchor)
