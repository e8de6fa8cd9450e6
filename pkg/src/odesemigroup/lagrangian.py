"""Inverse variational problem for y'' + B y' + C y = 0.

Synthesizes standard, null and nonstandard Lagrangians, their gauge
functions, and checks them through Euler-Lagrange residuals, the third
Helmholtz condition and the Riccati equation behind the nonstandard form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np

from .checks import CheckResult
from .expr import (
    HALF,
    Y,
    YP,
    YPP,
    Bindings,
    Const,
    DomainError,
    Expr,
    Float,
    add,
    as_expr,
    aux,
    compare_on_domain,
    const,
    differentiate,
    div,
    exp,
    integral,
    lambdify,
    mul,
    natural_primitive,
    neg,
    partial_x,
    power,
)
from .expr.evaluate import compile_expr
from .ode_algebra import OdeOperator, Trajectory, integrate

KINDS = ("minimal", "middle", "maximal", "null_mid", "null_max", "nonstandard")
STANDARD_KINDS = ("minimal", "middle", "maximal")
NULL_KINDS = ("null_mid", "null_max")

TOL_SYMBOLIC = 1e-9
TOL_NULL = 1e-10
TOL_GAUGE = 1e-8
TOL_EL = 1e-6
TOL_NSL = 1e-5
TOL_RICCATI = 1e-6
AUX_RESIDUAL_TOL = 1e-7
VBAR = "vbar"


class DegeneratePairError(ValueError):
    """The two solutions paired in a nonstandard Lagrangian are proportional."""


class VanishingAuxiliaryError(ValueError):
    """The auxiliary solution has a zero inside the requested range."""


# ---------------------------------------------------------------------------
# envelopes

def _primitive_is_valid(P: Expr, o: OdeOperator) -> bool:
    lo, hi = o.window
    for vals in o.parameter_grid():
        f = lambdify(P, vals)
        try:
            for x in np.linspace(lo, hi, 41):
                f(float(x))
        except DomainError:
            return False
    return True


def envelope(o: OdeOperator, power_: int | Fraction = 1) -> Expr:
    """exp(power * integral of B), with the integral anchored at the window's left end.

    When B has a closed-form primitive valid on the window that primitive
    is used as is, so B = alpha/x gives x^alpha exactly; the constant it
    differs by from the anchored integral only rescales a1.
    """
    lo = o.window[0]
    P = natural_primitive(o.B, anchor=lo)
    if P is None or not _primitive_is_valid(P, o):
        P = integral(o.B, Float(lo))
    return exp(mul(const(power_), P))


def envelope_standard(o: OdeOperator) -> Expr:
    return envelope(o, 1)


def envelope_nonstandard(o: OdeOperator) -> Expr:
    return envelope(o, -2)


# ---------------------------------------------------------------------------
# Lagrangians

@dataclass(frozen=True, eq=False)
class LagrangianSpec:
    kind: str
    body: Expr
    source: OdeOperator
    a1: float = 1.0
    a2: float = 1.0
    auxiliary: object | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown Lagrangian kind {self.kind!r}")
        if any(n == YPP for n in self.body.walk()):
            raise ValueError("a Lagrangian body may not contain y''")
        if self.kind == "nonstandard" and self.auxiliary is None:
            raise ValueError("a nonstandard Lagrangian needs its auxiliary solution")

    @property
    def aux_table(self) -> dict:
        return {VBAR: self.auxiliary} if self.auxiliary is not None else {}

    @cached_property
    def euler_lagrange(self) -> Expr:
        return euler_lagrange_expression(self.body)

    def __str__(self):
        return str(self.body)


def _coefficient(a) -> Expr:
    if isinstance(a, Expr):
        return a
    if isinstance(a, float) and a.is_integer():
        a = int(a)
    return const(a)


def _c_total(o: OdeOperator) -> Expr:
    return add(o.C, Float(o.lam)) if o.lam else o.C


def _minimal_body(o: OdeOperator, a1) -> Expr:
    Es = envelope_standard(o)
    return mul(HALF, _coefficient(a1), add(power(YP, 2), neg(mul(_c_total(o), power(Y, 2)))), Es)


def _null_mid_body(a2) -> Expr:
    return mul(HALF, _coefficient(a2), YP, Y)


def _null_max_body(o: OdeOperator, a1) -> Expr:
    B = o.B
    Es = envelope_standard(o)
    inner = add(mul(B, YP), mul(HALF, add(differentiate(B, "x"), power(B, 2)), Y))
    return mul(HALF, _coefficient(a1), inner, Y, Es)


def standard_lagrangian(o: OdeOperator, kind: str = "minimal", a1=1, a2=1) -> LagrangianSpec:
    """minimal (a1/2)(y'^2 - C y^2) E_s; middle adds (a2/2) y' y; maximal adds the null_max term."""
    if kind not in STANDARD_KINDS:
        raise ValueError(f"standard kinds are {STANDARD_KINDS}, got {kind!r}")
    if not float(a1) > 0:
        raise ValueError("a1 must be positive")
    body = _minimal_body(o, a1)
    if kind == "middle":
        body = add(body, _null_mid_body(a2))
    elif kind == "maximal":
        body = add(body, _null_max_body(o, a1))
    return LagrangianSpec(kind, body, o, float(a1), float(a2))


def null_lagrangian(o: OdeOperator, kind: str = "null_mid", a1=1, a2=1) -> LagrangianSpec:
    if kind == "null_mid":
        body = _null_mid_body(a2)
    elif kind == "null_max":
        body = _null_max_body(o, a1)
    else:
        raise ValueError(f"null kinds are {NULL_KINDS}, got {kind!r}")
    return LagrangianSpec(kind, body, o, float(a1), float(a2))


def lagrangian(o: OdeOperator, kind: str, a1=1, a2=1, vbar=None) -> LagrangianSpec:
    if kind in STANDARD_KINDS:
        return standard_lagrangian(o, kind, a1, a2)
    if kind in NULL_KINDS:
        return null_lagrangian(o, kind, a1, a2)
    if kind == "nonstandard":
        return nonstandard_lagrangian(o, vbar if vbar is not None else auxiliary_solution(o))
    raise ValueError(f"unknown Lagrangian kind {kind!r}")


def quadratic_coefficients(spec: LagrangianSpec) -> tuple[Expr, Expr, Expr]:
    """(f1, f2, f3) with L = f1 y'^2/2 + f2 y' y/2 + f3 y^2/2."""
    L = spec.body
    f1 = differentiate(differentiate(L, "y'"), "y'")
    f2 = mul(2, differentiate(differentiate(L, "y"), "y'"))
    f3 = differentiate(differentiate(L, "y"), "y")
    return f1, f2, f3


def closure_check(spec: LagrangianSpec, *, trials: int = 64, seed: int = 0, tol: float = TOL_SYMBOLIC) -> CheckResult:
    """f1' - B f1 == 0 and f2'/2 - f3 - C f1 == 0 by sampled equality."""
    o = spec.source
    f1, f2, f3 = quadratic_coefficients(spec)
    c1 = compare_on_domain(partial_x(f1), mul(o.B, f1), o.window, trials, o.params, seed=seed, tol=tol)
    c2 = compare_on_domain(add(mul(HALF, partial_x(f2)), neg(f3)), mul(_c_total(o), f1), o.window, trials,
                           o.params, seed=seed, tol=tol)
    worst = c1 if c1.worst >= c2.worst else c2
    return CheckResult(c1.equal and c2.equal, worst.worst, tol, worst.witness,
                       "f1' = B f1 and f2'/2 - f3 = C f1")


# ---------------------------------------------------------------------------
# Euler-Lagrange machinery

def total_derivative(e) -> Expr:
    """d/dx along a path: partial_x + (d/dy) y' + (d/dy') y''."""
    e = as_expr(e)
    return add(partial_x(e), mul(differentiate(e, "y"), YP), mul(differentiate(e, "y'"), YPP))


def _el_parts(L: Expr) -> tuple[Expr, ...]:
    p = differentiate(L, "y'")
    return (
        partial_x(p),
        mul(differentiate(p, "y"), YP),
        mul(differentiate(p, "y'"), YPP),
        neg(differentiate(L, "y")),
    )


def euler_lagrange_expression(L) -> Expr:
    """d/dx(dL/dy') - dL/dy as an expression in x, y, y', y''."""
    return add(*_el_parts(as_expr(L)))


@dataclass(frozen=True)
class TestPath:
    """Smooth function of x used as an arbitrary (non-solution) path."""

    name: str
    expr: Expr

    @classmethod
    def of(cls, text: str, name: str | None = None) -> "TestPath":
        return cls(name or text, as_expr(text))

    @cached_property
    def _derivs(self) -> list:
        out = [self.expr]
        for _ in range(4):
            out.append(differentiate(out[-1], "x"))
        return out

    def derivative(self, x: float, order: int = 0) -> float:
        while order >= len(self._derivs):
            self._derivs.append(differentiate(self._derivs[-1], "x"))
        return lambdify(self._derivs[order])(float(x))

    def __call__(self, x: float) -> float:
        return self.derivative(x, 0)


STANDARD_PATHS = tuple(TestPath.of(t) for t in ("1", "x", "x^2", "sin(x)", "cos(2*x)", "exp(x/5)", "x*sin(x)", "1/(1 + x^2)"))
PATH_SAMPLES = 25


def path_points(path, window: Sequence[float], n: int = PATH_SAMPLES) -> list[float]:
    """Interior sample points: trajectory nodes (thinned) or a uniform grid."""
    if isinstance(path, Trajectory):
        g = path.grid[1:-1]
        step = max(1, len(g) // (4 * n))
        return [float(x) for x in g[::step]]
    lo, hi = float(window[0]), float(window[1])
    return [float(x) for x in np.linspace(lo, hi, n + 2)[1:-1]]


def _path_state(path, x: float) -> tuple[float, float, float]:
    return path.derivative(x, 0), path.derivative(x, 1), path.derivative(x, 2)


class _ELEvaluator:
    def __init__(self, spec: LagrangianSpec, params: Mapping[str, float] | None = None):
        self.spec = spec
        self.params = spec.source.values(params)
        self.parts = [compile_expr(p) for p in _el_parts(spec.body)]
        self.wronskian = compile_expr(add(mul(YP, aux(VBAR)), neg(mul(Y, aux(VBAR, 1))))) if spec.kind == "nonstandard" else None

    def __call__(self, path, x: float) -> tuple[float, float]:
        y, yp, ypp = _path_state(path, x)
        b = Bindings(self.params, x, y, yp, ypp, self.spec.aux_table)
        try:
            if self.wronskian is not None:
                w = self.wronskian(b)
                v, vp = self.spec.auxiliary.derivative(x, 0), self.spec.auxiliary.derivative(x, 1)
                if abs(w) <= 1e-9 * (abs(yp * v) + abs(y * vp)) + 1e-300:
                    raise DegeneratePairError(f"y and the auxiliary solution are proportional near x={x!r} (Wronskian {w!r})")
            terms = [f(b) for f in self.parts]
        except (ZeroDivisionError, OverflowError) as exc:
            raise DomainError(f"Euler-Lagrange evaluation failed at x={x!r}: {exc}") from None
        value = math.fsum(terms)
        scale = 1.0 + math.fsum(abs(t) for t in terms)
        if not math.isfinite(value):
            raise DomainError(f"non-finite Euler-Lagrange residual at x={x!r}")
        return value, scale


def euler_lagrange_residual(spec: LagrangianSpec, path, x: float, params=None) -> float:
    """d/dx(dL/dy') - dL/dy evaluated along ``path`` at ``x``."""
    return _ELEvaluator(spec, params)(path, float(x))[0]


def el_battery(spec: LagrangianSpec, paths=None, *, tol: float = TOL_NULL, params=None, relative_to: str = "terms") -> CheckResult:
    """Worst |EL| / scale over sample points of each path."""
    paths = STANDARD_PATHS if paths is None else paths
    ev = _ELEvaluator(spec, params)
    samples = []
    for p in paths:
        for x in path_points(p, spec.source.window):
            value, scale = ev(p, x)
            samples.append((abs(value) / scale, {"x": x, "path": getattr(p, "name", "trajectory"), "residual": value}))
    return CheckResult.collect(tol, samples, f"Euler-Lagrange residual of {spec.kind}")


def el_identically_zero(spec: LagrangianSpec, paths=None, *, tol: float = TOL_NULL, params=None) -> bool:
    return el_battery(spec, paths, tol=tol, params=params).passed


def el_on_solution(spec: LagrangianSpec, trajectory: Trajectory, *, tol: float = TOL_EL) -> CheckResult:
    return el_battery(spec, [trajectory], tol=tol, params=trajectory.params)


def el_agreement(specs: Sequence[LagrangianSpec], paths=None, *, tol: float = 1e-8, params=None) -> CheckResult:
    """Pointwise agreement of EL residuals of several Lagrangians for one operator."""
    paths = STANDARD_PATHS if paths is None else paths
    evs = [_ELEvaluator(s, params) for s in specs]
    samples = []
    for p in paths:
        for x in path_points(p, specs[0].source.window):
            vals = [ev(p, x) for ev in evs]
            ref, scale = vals[0]
            for (v, s), spec in zip(vals[1:], specs[1:]):
                samples.append((abs(v - ref) / max(scale, s),
                                {"x": x, "path": getattr(p, "name", "trajectory"), "kinds": f"{specs[0].kind}/{spec.kind}"}))
    return CheckResult.collect(tol, samples, "pairwise Euler-Lagrange agreement")


# ---------------------------------------------------------------------------
# gauge functions

@dataclass(frozen=True)
class GaugeFunction:
    phi: Expr
    generates: str


def gauge_function(spec: LagrangianSpec) -> GaugeFunction:
    """Phi(x, y) whose total derivative is the null Lagrangian (additive constant dropped)."""
    if spec.kind == "null_mid":
        return GaugeFunction(mul(Const(Fraction(1, 4)), _coefficient(spec.a2), power(Y, 2)), "mid-min")
    if spec.kind == "null_max":
        o = spec.source
        phi = mul(Const(Fraction(1, 4)), _coefficient(spec.a1), o.B, envelope_standard(o), power(Y, 2))
        return GaugeFunction(phi, "max-min")
    raise ValueError(f"gauge functions exist for null kinds only, got {spec.kind!r}")


def gauge_check(g: GaugeFunction, spec: LagrangianSpec, paths=None, *, tol: float = TOL_GAUGE, params=None) -> CheckResult:
    """|dPhi/dx - L_null| <= tol (1 + |L_null|) along each path."""
    paths = STANDARD_PATHS if paths is None else paths
    dphi = compile_expr(add(partial_x(g.phi), mul(differentiate(g.phi, "y"), YP)))
    body = compile_expr(spec.body)
    vals = spec.source.values(params)
    samples = []
    for p in paths:
        for x in path_points(p, spec.source.window):
            b = Bindings(vals, x, p.derivative(x, 0), p.derivative(x, 1))
            d, L = dphi(b), body(b)
            samples.append((abs(d - L) / (1 + abs(L)), {"x": x, "path": getattr(p, "name", "?"), "offset": d - L}))
    return CheckResult.collect(tol, samples, f"gauge function for {spec.kind}")


# ---------------------------------------------------------------------------
# Helmholtz third condition

def ode_form(o: OdeOperator) -> Expr:
    """y'' + B y' + (C + lam) y."""
    return add(YPP, mul(o.B, YP), mul(_c_total(o), Y))


def weighted_ode_form(o: OdeOperator) -> Expr:
    """E_s (y'' + B y' + (C + lam) y)."""
    return mul(envelope_standard(o), ode_form(o))


def helmholtz_third_condition(F, window: Sequence[float] = (0.5, 10.0), params=None, *, trials: int = 64,
                              seed: int = 0, tol: float = TOL_SYMBOLIC) -> CheckResult:
    """Self-adjointness dF/dy' == d/dx (dF/dy'') for F linear in y''.

    The x-derivative acts on the explicit x-dependence of dF/dy'' only.
    """
    F = as_expr(F)
    lhs = differentiate(F, "y'")
    rhs = partial_x(differentiate(F, "y''"))
    c = compare_on_domain(lhs, rhs, window, trials, params, seed=seed, tol=tol)
    return CheckResult(c.equal, c.worst, tol, c.witness, "dF/dy' = d/dx dF/dy''")


# ---------------------------------------------------------------------------
# Riccati equation and nonstandard Lagrangian

def riccati_expression(u, o: OdeOperator) -> Expr:
    """u' + u^2/3 - u B/3 - (2 B^2/3 + 2 B' - 3 C)."""
    u = as_expr(u)
    B = o.B
    third = Const(Fraction(1, 3))
    bracket = add(mul(Const(Fraction(2, 3)), power(B, 2)), mul(2, differentiate(B, "x")), mul(-3, _c_total(o)))
    return add(partial_x(u), mul(third, power(u, 2)), neg(mul(third, u, B)), neg(bracket))


def riccati_residual(u, o: OdeOperator, x: float, params=None, aux_table: Mapping | None = None) -> float:
    b = Bindings(o.values(params), float(x), aux=dict(aux_table or {}))
    try:
        return compile_expr(riccati_expression(u, o))(b)
    except (ZeroDivisionError, OverflowError) as exc:
        raise DomainError(str(exc)) from None


@dataclass(frozen=True, eq=False)
class RiccatiSolution:
    """u = 3 vbar'/vbar + 2B with vbar bound as an auxiliary function."""

    u: Expr
    operator: OdeOperator
    vbar: object
    span: tuple[float, float]

    @property
    def aux_table(self):
        return {VBAR: self.vbar}

    def __call__(self, x: float) -> float:
        return compile_expr(self.u)(Bindings(self.operator.values(self._params()), float(x), aux=self.aux_table))

    def _params(self):
        return getattr(self.vbar, "params", None) or None

    def points(self, n: int = PATH_SAMPLES) -> list[float]:
        if isinstance(self.vbar, Trajectory):
            return path_points(self.vbar, self.span, n)
        return path_points(None, self.span, n)

    def check(self, *, tol: float = TOL_RICCATI) -> CheckResult:
        expr = compile_expr(riccati_expression(self.u, self.operator))
        vals = self.operator.values(self._params())
        samples = []
        for x in self.points():
            b = Bindings(vals, x, aux=self.aux_table)
            r = expr(b)
            samples.append((abs(r), {"x": x, "residual": r}))
        return CheckResult.collect(tol, samples, "Riccati residual of u = 3 vbar'/vbar + 2B")


def _aux_residual(o: OdeOperator, vbar) -> float:
    if isinstance(vbar, Trajectory):
        r = vbar.residuals()
        ypp = vbar.second_at_nodes()
        return float(np.max(np.abs(r) / (1 + np.abs(ypp))))
    return 0.0


def _check_zero_free(vbar, span) -> None:
    if isinstance(vbar, Trajectory):
        ys = vbar.y
    else:
        ys = np.array([vbar.derivative(x, 0) for x in np.linspace(span[0], span[1], 201)])
    if np.any(ys == 0) or (np.any(ys > 0) and np.any(ys < 0)):
        raise VanishingAuxiliaryError(
            "auxiliary solution changes sign inside the window; restrict the window between its zeros"
        )


def riccati_solution(o: OdeOperator, vbar, span: Sequence[float] | None = None) -> RiccatiSolution:
    """u = 3 vbar'/vbar + 2B for a solution vbar of the operator, nonzero on the span."""
    if isinstance(vbar, Trajectory):
        span = vbar.span if span is None else tuple(span)
        if _aux_residual(o, vbar) > AUX_RESIDUAL_TOL:
            raise ValueError("auxiliary trajectory does not solve the operator to 1e-7")
    else:
        span = o.window if span is None else tuple(span)
    _check_zero_free(vbar, span)
    u = add(mul(3, div(aux(VBAR, 1), aux(VBAR))), mul(2, o.B))
    return RiccatiSolution(u, o, vbar, (float(span[0]), float(span[1])))


def auxiliary_solution(o: OdeOperator, params=None, initial=(1.0, 0.0)) -> Trajectory:
    """Solution from (y, y') = initial at the window's left end, cut to its longest zero-free stretch."""
    lo, hi = o.window
    tr = integrate(o, lo, initial[0], initial[1], hi, params)
    return tr.longest_zero_free()


def independent_solution(o: OdeOperator, vbar: Trajectory, initial=(0.0, 1.0)) -> Trajectory:
    """A second solution reported on the auxiliary's nodes, started where the auxiliary was."""
    x0 = vbar.initial[0]
    return integrate(o, x0, initial[0], initial[1], vbar.span[1], vbar.params, nodes=vbar.grid)


def nonstandard_lagrangian(o: OdeOperator, vbar) -> LagrangianSpec:
    """E_ns / ((y' vbar - y vbar') vbar^2) with E_ns = exp(-2 integral of B)."""
    if vbar is None:
        raise ValueError("a nonstandard Lagrangian needs an auxiliary solution")
    if isinstance(vbar, Trajectory) and _aux_residual(o, vbar) > AUX_RESIDUAL_TOL:
        raise ValueError("auxiliary trajectory does not solve the operator to 1e-7")
    span = vbar.span if isinstance(vbar, Trajectory) else o.window
    _check_zero_free(vbar, span)
    W = add(mul(YP, aux(VBAR)), neg(mul(Y, aux(VBAR, 1))))
    body = div(envelope_nonstandard(o), mul(W, power(aux(VBAR), 2)))
    return LagrangianSpec("nonstandard", body, o, auxiliary=vbar)
