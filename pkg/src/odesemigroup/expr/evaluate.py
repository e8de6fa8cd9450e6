"""Numeric evaluation of expression trees.

Expressions compile once (memoized) into nested closures over a
:class:`Bindings` object.  Every failure mode of real arithmetic -- poles,
logarithms of non-positive numbers, non-real powers, overflow -- raises
:class:`DomainError`; no NaN or infinity ever escapes.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Mapping

from .nodes import (
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
    as_expr,
    parameters,
)


class EvaluationError(ArithmeticError):
    pass


class UnboundSymbolError(EvaluationError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else "unbound symbol"


class DomainError(EvaluationError, ValueError):
    pass


class PoleError(DomainError):
    """Integrand pole inside a requested integration interval."""


@dataclass
class Bindings:
    """Values for the free symbols of an expression.

    ``aux`` maps auxiliary-function names to objects exposing
    ``derivative(x, order)`` (trajectories and test paths both do).
    """

    params: Mapping[str, float] = field(default_factory=dict)
    x: float | None = None
    y: float | None = None
    yp: float | None = None
    ypp: float | None = None
    aux: Mapping[str, object] = field(default_factory=dict)

    def at(self, x: float, y=None, yp=None, ypp=None) -> "Bindings":
        return Bindings(self.params, x, y, yp, ypp, self.aux)


def _need(v, name):
    if v is None:
        raise UnboundSymbolError(f"symbol {name!r} is unbound")
    return v


def _check(v: float, what: str) -> float:
    if not math.isfinite(v):
        raise DomainError(f"{what} is not finite")
    return v


def _pow(b: float, e: float) -> float:
    if b == 0.0 and e < 0:
        raise DomainError("pole: zero raised to a negative power")
    if b < 0 and e != int(e):
        raise DomainError(f"negative base {b!r} with non-integer exponent {e!r}")
    try:
        return _check(b**e, "power")
    except OverflowError:
        raise DomainError("power overflow") from None


def _div(a: float, b: float) -> float:
    if b == 0.0:
        raise DomainError("pole: division by zero")
    return _check(a / b, "quotient")


def _ln(v: float) -> float:
    if v <= 0:
        raise DomainError(f"ln of non-positive value {v!r}")
    return math.log(v)


def _exp(v: float) -> float:
    try:
        return math.exp(v)
    except OverflowError:
        raise DomainError("exp overflow") from None


_FUNCS = {"exp": _exp, "ln": _ln, "sin": math.sin, "cos": math.cos}


@lru_cache(maxsize=4096)
def compile_expr(e: Expr) -> Callable[[Bindings], float]:
    """Closure evaluating ``e`` against a :class:`Bindings` (no final check)."""
    if isinstance(e, (Const, Float)):
        v = float(e.value)
        return lambda b: v
    if isinstance(e, Var):
        return lambda b: _need(b.x, "x")
    if isinstance(e, Dep):
        attr, label = (("y", "y"), ("yp", "y'"), ("ypp", "y''"))[e.order]
        return lambda b: _need(getattr(b, attr), label)
    if isinstance(e, Parameter):
        name = e.name

        def get_param(b):
            try:
                return float(b.params[name])
            except KeyError:
                raise UnboundSymbolError(f"parameter {name!r} is unbound") from None

        return get_param
    if isinstance(e, Aux):
        name, order = e.name, e.order

        def get_aux(b):
            try:
                fn = b.aux[name]
            except KeyError:
                raise UnboundSymbolError(f"auxiliary function @{name} is unbound") from None
            return fn.derivative(_need(b.x, "x"), order)

        return get_aux
    if isinstance(e, Add):
        fs = tuple(compile_expr(t) for t in e.terms)
        return lambda b: math.fsum(f(b) for f in fs)
    if isinstance(e, Mul):
        fs = tuple(compile_expr(t) for t in e.factors)

        def product(b):
            acc = 1.0
            for f in fs:
                acc *= f(b)
            return acc

        return product
    if isinstance(e, Neg):
        f = compile_expr(e.arg)
        return lambda b: -f(b)
    if isinstance(e, Div):
        fn, fd = compile_expr(e.num), compile_expr(e.den)
        return lambda b: _div(fn(b), fd(b))
    if isinstance(e, Pow):
        fb, fe = compile_expr(e.base), compile_expr(e.exponent)
        if isinstance(e.exponent, Const) and e.exponent.value.denominator == 1:
            k = int(e.exponent.value)
            if k > 0:
                return lambda b: fb(b) ** k
        return lambda b: _pow(fb(b), fe(b))
    if isinstance(e, Func):
        f, g = _FUNCS[e.name], compile_expr(e.arg)
        return lambda b: f(g(b))
    if isinstance(e, Integral):
        key_params = tuple(sorted(parameters(e.integrand)))
        integrand, anchor = e.integrand, float(e.anchor.value)

        def get_integral(b):
            pv = tuple((k, float(b.params[k])) for k in key_params if k in b.params)
            if len(pv) != len(key_params):
                missing = set(key_params) - {k for k, _ in pv}
                raise UnboundSymbolError(f"parameters {sorted(missing)} are unbound")
            return quadrature_primitive(integrand, anchor, pv, _need(b.x, "x"))

        return get_integral
    raise TypeError(f"cannot evaluate node {e!r}")


def evaluate(e, bindings: Bindings | Mapping | None = None, **symbols) -> float:
    """Evaluate ``e`` in IEEE double precision.

    ``bindings`` may be a :class:`Bindings` or a plain mapping of parameter
    values; keyword arguments ``x``, ``y``, ``yp``, ``ypp`` override.
    """
    e = as_expr(e)
    if bindings is None:
        bindings = Bindings()
    elif not isinstance(bindings, Bindings):
        bindings = Bindings(params=dict(bindings))
    if symbols:
        unknown = set(symbols) - {"x", "y", "yp", "ypp"}
        if unknown:
            raise TypeError(f"unknown symbol keywords {sorted(unknown)}")
        bindings = Bindings(
            bindings.params,
            symbols.get("x", bindings.x),
            symbols.get("y", bindings.y),
            symbols.get("yp", bindings.yp),
            symbols.get("ypp", bindings.ypp),
            bindings.aux,
        )
    try:
        value = compile_expr(e)(bindings)
    except ZeroDivisionError:
        raise DomainError("pole: division by zero") from None
    except OverflowError:
        raise DomainError("overflow") from None
    except ValueError as exc:
        if isinstance(exc, DomainError):
            raise
        raise DomainError(str(exc)) from None
    return _check(value, "result")


def lambdify(e, params: Mapping[str, float] | None = None) -> Callable[[float], float]:
    """Fast scalar function of x for an x-and-parameters expression."""
    f = compile_expr(as_expr(e))
    b = Bindings(params=dict(params or {}))

    def call(x: float) -> float:
        try:
            return _check(f(Bindings(b.params, x)), "result")
        except ZeroDivisionError:
            raise DomainError("pole: division by zero") from None
        except OverflowError:
            raise DomainError("overflow") from None

    return call


# ---------------------------------------------------------------------------
# quadrature with deterministic cached panels

PANEL = 0.25
SIMPSON_TOL = 1e-12
_MAX_DEPTH = 48


def adaptive_simpson(f: Callable[[float], float], a: float, b: float, tol: float = SIMPSON_TOL) -> float:
    """Adaptive Simpson quadrature of ``f`` over [a, b] to absolute ``tol``."""
    if a == b:
        return 0.0
    fa, fm, fb = f(a), f(0.5 * (a + b)), f(b)
    whole = (b - a) / 6.0 * (fa + 4 * fm + fb)
    total = 0.0
    stack = [(a, b, fa, fm, fb, whole, tol, 0)]
    while stack:
        lo, hi, flo, fmid, fhi, s, eps, depth = stack.pop()
        mid = 0.5 * (lo + hi)
        lm, rm = 0.5 * (lo + mid), 0.5 * (mid + hi)
        flm, frm = f(lm), f(rm)
        left = (mid - lo) / 6.0 * (flo + 4 * flm + fmid)
        right = (hi - mid) / 6.0 * (fmid + 4 * frm + fhi)
        delta = left + right - s
        if abs(delta) <= 15 * eps or depth >= _MAX_DEPTH:
            if depth >= _MAX_DEPTH and abs(delta) > 15 * eps:
                raise PoleError(f"quadrature failed to converge near x={mid!r}")
            total += left + right + delta / 15.0
        else:
            stack.append((mid, hi, fmid, frm, fhi, right, eps / 2, depth + 1))
            stack.append((lo, mid, flo, flm, fmid, left, eps / 2, depth + 1))
    if not math.isfinite(total):
        raise PoleError("quadrature produced a non-finite value")
    return total


class _PanelCache:
    """Integrals over fixed panels [anchor + k*PANEL, anchor + (k+1)*PANEL].

    The panel grid is fixed by the anchor, so every primitive value is a
    pure function of its arguments regardless of call history.
    """

    def __init__(self):
        self._lock = threading.Lock()
        self._panels: dict = {}

    def panel(self, key, k: int, f) -> float:
        with self._lock:
            hit = self._panels.get((key, k))
        if hit is not None:
            return hit
        anchor = key[1]
        lo, hi = anchor + k * PANEL, anchor + (k + 1) * PANEL
        value = adaptive_simpson(f, lo, hi)
        with self._lock:
            self._panels.setdefault((key, k), value)
            return self._panels[(key, k)]

    def clear(self):
        with self._lock:
            self._panels.clear()


_CACHE = _PanelCache()


def quadrature_primitive(integrand: Expr, anchor: float, params: tuple, x: float) -> float:
    """F(x) = integral of ``integrand`` from ``anchor`` to ``x``."""
    g = compile_expr(integrand)
    b = Bindings(params=dict(params))

    def f(t: float) -> float:
        try:
            return _check(g(Bindings(b.params, t)), "integrand")
        except (DomainError, ZeroDivisionError) as exc:
            raise PoleError(f"integrand pole inside [{anchor!r}, {x!r}] near x={t!r}: {exc}") from None

    key = (integrand, anchor, params)
    n = math.floor((x - anchor) / PANEL)
    total = []
    if n >= 0:
        total = [_CACHE.panel(key, k, f) for k in range(n)]
        total.append(adaptive_simpson(f, anchor + n * PANEL, x))
    else:
        # x lies left of the anchor: whole panels k = -1 .. n+1 then a partial
        total = [-_CACHE.panel(key, k, f) for k in range(-1, n, -1)]
        total.append(-adaptive_simpson(f, x, anchor + (n + 1) * PANEL))
    return math.fsum(total)


def clear_quadrature_cache():
    _CACHE.clear()
