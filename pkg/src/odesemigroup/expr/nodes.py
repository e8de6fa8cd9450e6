"""Immutable expression tree and its light normalizing constructors.

Every node is a frozen dataclass, so structural equality and hashing come
for free.  Trees should be built with the module-level constructors
(:func:`add`, :func:`mul`, :func:`div`, ...) rather than the node classes
directly: the constructors flatten sums/products and fold numeric
constants, and ``parse(render(e)) == e`` relies on every tree being in that
normal form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Union

Number = Union[int, Fraction, float]

FUNCTIONS = ("exp", "ln", "sin", "cos")
RESERVED = frozenset({"x", "y", "integral", *FUNCTIONS})


class Expr:
    """Base class of all expression nodes."""

    __slots__ = ()

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return add(self, neg(other))

    def __rsub__(self, other):
        return add(other, neg(self))

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __pow__(self, other):
        return power(self, other)

    def __rpow__(self, other):
        return power(other, self)

    def __neg__(self):
        return neg(self)

    def __str__(self):
        from .parse import render

        return render(self)

    def children(self) -> tuple[Expr, ...]:
        return ()

    def walk(self):
        yield self
        for child in self.children():
            yield from child.walk()


def _cached_hash(self):
    h = self._h
    if h is None:
        h = hash((type(self).__name__,) + tuple(getattr(self, f) for f in self._fields))
        object.__setattr__(self, "_h", h)
    return h


def _node(*fields):
    def wrap(cls):
        cls = dataclass(frozen=True, eq=True)(cls)
        cls._fields = fields
        cls.__hash__ = _cached_hash
        return cls

    return wrap


@_node("value")
class Const(Expr):
    """Exact rational constant."""

    value: Fraction
    _h: int | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if not isinstance(self.value, Fraction):
            object.__setattr__(self, "value", Fraction(self.value))


@_node("value")
class Float(Expr):
    value: float
    _h: int | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        v = float(self.value)
        if not math.isfinite(v):
            raise ValueError(f"non-finite float constant {self.value!r}")
        object.__setattr__(self, "value", v)


@_node()
class Var(Expr):
    """The independent variable x."""

    _h: int | None = field(default=None, compare=False, repr=False)


@_node("order")
class Dep(Expr):
    """Dependent slot: y (order 0), y' (1) or y'' (2)."""

    order: int
    _h: int | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.order not in (0, 1, 2):
            raise ValueError("only y, y' and y'' are representable")


@_node("name")
class Parameter(Expr):
    name: str
    _h: int | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if not self.name or not self.name.isidentifier() or self.name in RESERVED:
            raise ValueError(f"invalid parameter name {self.name!r}")


@_node("terms")
class Add(Expr):
    terms: tuple
    _h: int | None = field(default=None, compare=False, repr=False)

    def children(self):
        return self.terms


@_node("factors")
class Mul(Expr):
    factors: tuple
    _h: int | None = field(default=None, compare=False, repr=False)

    def children(self):
        return self.factors


@_node("base", "exponent")
class Pow(Expr):
    base: Expr
    exponent: Expr
    _h: int | None = field(default=None, compare=False, repr=False)

    def children(self):
        return (self.base, self.exponent)


@_node("arg")
class Neg(Expr):
    arg: Expr
    _h: int | None = field(default=None, compare=False, repr=False)

    def children(self):
        return (self.arg,)


@_node("num", "den")
class Div(Expr):
    num: Expr
    den: Expr
    _h: int | None = field(default=None, compare=False, repr=False)

    def children(self):
        return (self.num, self.den)


@_node("name", "arg")
class Func(Expr):
    name: str
    arg: Expr
    _h: int | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.name not in FUNCTIONS:
            raise ValueError(f"unknown function {self.name!r}")

    def children(self):
        return (self.arg,)


@_node("integrand", "anchor")
class Integral(Expr):
    """Antiderivative of an x-only integrand, zero at ``anchor``.

    Used when no closed form is known; evaluated by cached quadrature.
    """

    integrand: Expr
    anchor: Expr
    _h: int | None = field(default=None, compare=False, repr=False)

    def children(self):
        return (self.integrand, self.anchor)


@_node("name", "order")
class Aux(Expr):
    """Known-numerically function of x (e.g. an auxiliary ODE solution).

    Evaluation looks ``name`` up in the bindings' ``aux`` table; its
    x-derivative is the same function at ``order + 1``.
    """

    name: str
    order: int = 0
    _h: int | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if not self.name.isidentifier():
            raise ValueError(f"invalid auxiliary function name {self.name!r}")


X = Var()
Y = Dep(0)
YP = Dep(1)
YPP = Dep(2)
ZERO = Const(0)
ONE = Const(1)
HALF = Const(Fraction(1, 2))


# ---------------------------------------------------------------------------
# numbers

def is_number(e) -> bool:
    return isinstance(e, (Const, Float))


def number_value(e):
    return e.value


def _num(v) -> Expr:
    if isinstance(v, float):
        return Float(v)
    return Const(v)


def as_expr(v) -> Expr:
    if isinstance(v, Expr):
        return v
    if isinstance(v, bool):
        raise TypeError("booleans are not expressions")
    if isinstance(v, (int, Fraction)):
        return Const(v)
    if isinstance(v, float):
        return Float(v)
    if isinstance(v, str):
        from .parse import parse

        return parse(v)
    raise TypeError(f"cannot convert {type(v).__name__} to Expr")


def const(v: Number) -> Expr:
    return _num(v if isinstance(v, float) else Fraction(v))


def _is_zero(e) -> bool:
    return is_number(e) and e.value == 0


def _is_one(e) -> bool:
    return is_number(e) and e.value == 1


def _fold(values: Iterable, op, start):
    total = start
    for v in values:
        total = op(total, v)
    return total


# ---------------------------------------------------------------------------
# constructors

def add(*terms) -> Expr:
    flat: list[Expr] = []
    for t in map(as_expr, terms):
        if isinstance(t, Add):
            flat.extend(t.terms)
        else:
            flat.append(t)
    numbers = [t.value for t in flat if is_number(t)]
    others = [t for t in flat if not is_number(t)]
    has_float = any(isinstance(t, Float) for t in flat)
    total = _fold(numbers, lambda a, b: a + b, Fraction(0))
    if has_float:
        total = float(total)
    out = _collect(others)
    if total != 0:
        out.insert(0, _num(total))
    if not out:
        return Float(0.0) if has_float else ZERO
    if len(out) == 1:
        return out[0]
    return Add(tuple(out))


def _split_coefficient(t: Expr):
    if isinstance(t, Neg):
        c, core = _split_coefficient(t.arg)
        return -c, core
    if isinstance(t, Mul) and is_number(t.factors[0]):
        rest = t.factors[1:]
        return t.factors[0].value, rest[0] if len(rest) == 1 else Mul(rest)
    return Fraction(1), t


def _collect(terms: list[Expr]) -> list[Expr]:
    """Merge terms that differ only by a numeric coefficient (order kept)."""
    coefs: dict[Expr, list] = {}
    order: list[Expr] = []
    for t in terms:
        c, core = _split_coefficient(t)
        if core in coefs:
            coefs[core][0] += c
            coefs[core][1] += 1
        else:
            coefs[core] = [c, 1, t]
            order.append(core)
    out = []
    for core in order:
        c, count, original = coefs[core]
        if count == 1:
            out.append(original)
        elif c != 0:
            out.append(mul(_num(c), core))
    return out


def mul(*factors) -> Expr:
    sign = 1
    coef: Fraction | float = Fraction(1)
    others: list[Expr] = []
    has_float = False

    def absorb(f: Expr):
        nonlocal sign, coef, has_float
        if isinstance(f, Neg):
            sign = -sign
            absorb(f.arg)
        elif isinstance(f, Mul):
            for g in f.factors:
                absorb(g)
        elif is_number(f):
            has_float = has_float or isinstance(f, Float)
            coef = coef * f.value
        else:
            others.append(f)

    for f in map(as_expr, factors):
        absorb(f)
    coef = sign * coef
    if has_float:
        coef = float(coef)
    if coef == 0 or not others:
        return _num(coef)
    rest = others[0] if len(others) == 1 else Mul(tuple(others))
    if coef == 1:
        return rest
    if coef == -1:
        return Neg(rest)
    return Mul((_num(coef),) + tuple(others))


def neg(a) -> Expr:
    a = as_expr(a)
    if is_number(a):
        return _num(-a.value)
    if isinstance(a, Neg):
        return a.arg
    if isinstance(a, Mul) and is_number(a.factors[0]):
        return mul(_num(-a.factors[0].value), *a.factors[1:])
    return Neg(a)


def sub(a, b) -> Expr:
    return add(a, neg(b))


def div(a, b) -> Expr:
    a, b = as_expr(a), as_expr(b)
    if is_number(b):
        if b.value == 0:
            raise ZeroDivisionError("division by the constant zero")
        inv = 1.0 / b.value if isinstance(b, Float) else 1 / b.value
        return mul(_num(inv), a)
    if _is_zero(a):
        return a
    if isinstance(a, Neg):
        return neg(div(a.arg, b))
    if isinstance(b, Neg):
        return neg(div(a, b.arg))
    if is_number(a) and a.value < 0:
        return neg(div(_num(-a.value), b))
    if isinstance(a, Mul) and is_number(a.factors[0]) and a.factors[0].value < 0:
        return neg(div(neg(a), b))
    # numeric coefficients live outside the quotient: c*n/d is Mul(c, Div(n, d))
    if is_number(a) and not (isinstance(a, Const) and a.value == 1):
        return mul(a, Div(ONE, b))
    if isinstance(a, Mul) and is_number(a.factors[0]):
        rest = a.factors[1:]
        return mul(a.factors[0], div(rest[0] if len(rest) == 1 else Mul(rest), b))
    return Div(a, b)


def power(b, e) -> Expr:
    b, e = as_expr(b), as_expr(e)
    if is_number(e):
        if e.value == 0:
            return Float(1.0) if isinstance(e, Float) or isinstance(b, Float) else ONE
        if isinstance(e, Const) and e.value == 1:
            return b
    if is_number(b):
        if isinstance(b, Const) and b.value == 1:
            return b
        if is_number(e):
            exact = isinstance(b, Const) and isinstance(e, Const)
            integral_exp = e.value == int(e.value)
            if b.value == 0 and e.value < 0:
                raise ZeroDivisionError("zero raised to a negative power")
            if integral_exp and exact:
                return Const(b.value ** int(e.value))
            if not exact and (b.value > 0 or integral_exp):
                return Float(float(b.value) ** float(e.value))
        if b.value == 0 and is_number(e) and e.value > 0:
            return b
    return Pow(b, e)


def func(name: str, arg) -> Expr:
    arg = as_expr(arg)
    if name == "exp":
        if _is_zero(arg):
            return ONE
        sign, inner = (-1, arg.arg) if isinstance(arg, Neg) else (1, arg)
        if isinstance(inner, Func) and inner.name == "ln":
            return power(inner.arg, Const(sign))
        if isinstance(inner, Mul):
            logs = [f for f in inner.factors if isinstance(f, Func) and f.name == "ln"]
            if len(logs) == 1:
                rest = [f for f in inner.factors if f is not logs[0]]
                return power(logs[0].arg, mul(sign, *rest))
    elif name == "ln":
        if _is_one(arg) and isinstance(arg, Const):
            return ZERO
        if isinstance(arg, Func) and arg.name == "exp":
            return arg.arg
    elif name == "sin":
        if _is_zero(arg) and isinstance(arg, Const):
            return ZERO
    elif name == "cos":
        if _is_zero(arg) and isinstance(arg, Const):
            return ONE
    return Func(name, arg)


def exp(a) -> Expr:
    return func("exp", a)


def ln(a) -> Expr:
    return func("ln", a)


def sin(a) -> Expr:
    return func("sin", a)


def cos(a) -> Expr:
    return func("cos", a)


def integral(integrand, anchor) -> Expr:
    integrand, anchor = as_expr(integrand), as_expr(anchor)
    if not is_number(anchor):
        raise ValueError("integral anchor must be a numeric constant")
    if _is_zero(integrand):
        return ZERO
    return Integral(integrand, anchor)


def param(name: str) -> Expr:
    return Parameter(name)


def aux(name: str, order: int = 0) -> Expr:
    return Aux(name, order)


# ---------------------------------------------------------------------------
# structural queries and rebuilding

def free_symbols(e: Expr) -> set[str]:
    """Names of the free symbols: 'x', "y", "y'", "y''", parameters, '@aux'."""
    out: set[str] = set()
    for node in e.walk():
        if isinstance(node, Var):
            out.add("x")
        elif isinstance(node, Dep):
            out.add("y" + "'" * node.order)
        elif isinstance(node, Parameter):
            out.add(node.name)
        elif isinstance(node, Aux):
            out.add("@" + node.name)
    return out


def parameters(e: Expr) -> set[str]:
    return {n.name for n in e.walk() if isinstance(n, Parameter)}


def has_dependent(e: Expr) -> bool:
    return any(isinstance(n, (Dep, Aux)) for n in e.walk())


def depends_on_x(e: Expr) -> bool:
    return any(isinstance(n, (Var, Integral, Aux)) for n in e.walk())


def rebuild(e: Expr, leaf) -> Expr:
    """Rebuild ``e`` bottom-up through the normalizing constructors.

    ``leaf(node)`` may return a replacement for any node or ``None`` to keep
    recursing.
    """
    rep = leaf(e)
    if rep is not None:
        return rep
    if isinstance(e, Add):
        return add(*(rebuild(t, leaf) for t in e.terms))
    if isinstance(e, Mul):
        return mul(*(rebuild(f, leaf) for f in e.factors))
    if isinstance(e, Pow):
        return power(rebuild(e.base, leaf), rebuild(e.exponent, leaf))
    if isinstance(e, Neg):
        return neg(rebuild(e.arg, leaf))
    if isinstance(e, Div):
        return div(rebuild(e.num, leaf), rebuild(e.den, leaf))
    if isinstance(e, Func):
        return func(e.name, rebuild(e.arg, leaf))
    if isinstance(e, Integral):
        return integral(rebuild(e.integrand, leaf), e.anchor)
    return e


def substitute(e: Expr, mapping: dict) -> Expr:
    """Replace parameters (by name) and/or ``'x'`` with expressions or numbers."""
    table = {k: as_expr(v) if not isinstance(v, float) else Float(v) for k, v in mapping.items()}

    def leaf(node):
        if isinstance(node, Parameter) and node.name in table:
            return table[node.name]
        if isinstance(node, Var) and "x" in table:
            return table["x"]
        if isinstance(node, Integral) and "x" in table:
            raise ValueError("cannot substitute x inside an integral")
        return None

    return rebuild(e, leaf)
