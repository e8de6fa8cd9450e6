"""Linear second-order operators y'' + B y' + C y (+ lambda y) and their addition."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Mapping

import numpy as np

from ..expr import (
    HALF,
    Add,
    Const,
    DomainError,
    Expr,
    Float,
    ParamRange,
    X,
    add,
    as_expr,
    compare_on_domain,
    div,
    evaluate,
    has_dependent,
    is_number,
    lambdify,
    Mul,
    Neg,
    mul,
    neg,
    parameters,
)


class OperatorError(ValueError):
    pass


class EmptyWindowError(OperatorError):
    pass


class IncompatibleParamsError(OperatorError):
    pass


VALIDATION_SAMPLES = 41


@dataclass(frozen=True, eq=False)
class OdeOperator:
    """The equation y'' + B(x) y' + C(x) y + lam*y = 0 on a numeric window.

    ``params`` declares every parameter appearing in B and C with its range;
    ``index`` names the parameter that plays the role of the ladder index.
    """

    B: Expr
    C: Expr
    params: Mapping[str, ParamRange] = field(default_factory=dict)
    lam: float = 0.0
    window: tuple[float, float] = (-10.0, 10.0)
    name: str = ""
    index: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "B", as_expr(self.B))
        object.__setattr__(self, "C", as_expr(self.C))
        object.__setattr__(self, "params", dict(self.params))
        object.__setattr__(self, "window", (float(self.window[0]), float(self.window[1])))
        object.__setattr__(self, "lam", float(self.lam))
        self._validate()

    def _validate(self):
        for label, e in (("B", self.B), ("C", self.C)):
            if has_dependent(e):
                raise OperatorError(f"{label} must depend only on x and parameters, got {e}")
            undeclared = parameters(e) - set(self.params)
            if undeclared:
                raise OperatorError(f"{label} uses undeclared parameters {sorted(undeclared)}")
        lo, hi = self.window
        if not lo < hi:
            raise OperatorError(f"empty domain window {self.window}")
        if self.index is not None and self.index not in self.params:
            raise OperatorError(f"index parameter {self.index!r} is not declared")
        for values in self.parameter_grid():
            fb, fc = lambdify(self.B, values), lambdify(self.C, values)
            for x in np.linspace(lo, hi, VALIDATION_SAMPLES):
                try:
                    fb(float(x))
                    fc(float(x))
                except DomainError as exc:
                    raise OperatorError(
                        f"coefficient pole inside window {self.window} at x={float(x)!r} "
                        f"with params {values}: {exc}"
                    ) from None

    # -- parameters -------------------------------------------------------

    def defaults(self) -> dict[str, float]:
        return {k: float(v.default) for k, v in self.params.items()}

    def values(self, overrides: Mapping[str, float] | None = None) -> dict[str, float]:
        out = self.defaults()
        for k, v in (overrides or {}).items():
            if k not in self.params:
                raise KeyError(f"operator {self.name or '<anonymous>'} has no parameter {k!r}")
            out[k] = float(v)
        return out

    def parameter_grid(self) -> list[dict[str, float]]:
        """Defaults plus every declared choice of each finite-set parameter."""
        base = self.defaults()
        grid = [base]
        for k, r in self.params.items():
            for c in r.choices:
                if float(c) != base[k]:
                    grid.append({**base, k: float(c)})
        return grid

    def with_params(self, **values) -> "OdeOperator":
        """Copy with the given parameters pinned to fixed values."""
        params = dict(self.params)
        for k, v in values.items():
            if k not in params:
                raise KeyError(f"no parameter {k!r}")
            params[k] = ParamRange.fixed(v)
        return replace(self, params=params)

    def with_lambda(self, lam: float) -> "OdeOperator":
        return replace(self, lam=lam)

    def with_window(self, lo: float, hi: float) -> "OdeOperator":
        return replace(self, window=(lo, hi))

    def eigen_form(self) -> "OdeOperator":
        """Move the numeric constant term of C into the eigenvalue shift."""
        terms = self.C.terms if isinstance(self.C, Add) else (self.C,)
        c0 = sum((t.value for t in terms if is_number(t)), Fraction(0))
        if c0 == 0:
            return self
        rest = add(*(t for t in terms if not is_number(t)))
        return replace(self, C=rest, lam=self.lam + float(c0))

    # -- numerics ---------------------------------------------------------

    def coefficients(self, x: float, params: Mapping[str, float] | None = None) -> tuple[float, float]:
        vals = self.values(params)
        return evaluate(self.B, vals, x=x), evaluate(self.C, vals, x=x)

    def describe(self) -> str:
        s = f"B = {self.B}; C = {self.C}"
        if self.lam:
            s += f"; lambda = {self.lam!r}"
        return s

    def __eq__(self, other):
        if not isinstance(other, OdeOperator):
            return NotImplemented
        return (self.B, self.C, self.lam, self.window, self.index) == (
            other.B, other.C, other.lam, other.window, other.index
        ) and self.params == other.params

    def __hash__(self):
        return hash((self.B, self.C, self.lam, self.window))


def ode_residual(o: OdeOperator, y: float, yp: float, ypp: float, x: float, params: Mapping[str, float] | None = None) -> float:
    """ypp + B(x) yp + C(x) y + lam y."""
    b, c = o.coefficients(x, params)
    return ypp + b * yp + c * y + o.lam * y


# ---------------------------------------------------------------------------
# the binary operation

def _scaled_terms(e: Expr, s) -> list[Expr]:
    """Terms of s*e with the scale pushed through sums and negations."""
    if isinstance(e, Add):
        return [t for term in e.terms for t in _scaled_terms(term, s)]
    if isinstance(e, Neg):
        return _scaled_terms(e.arg, neg(s))
    if isinstance(e, Mul) and len(e.factors) == 2 and is_number(e.factors[0]) and isinstance(e.factors[1], Add):
        return _scaled_terms(e.factors[1], mul(s, e.factors[0]))
    return [mul(s, e)]


def _merge_range(name: str, a: ParamRange, b: ParamRange) -> ParamRange:
    if a == b:
        return a
    if a.choices or b.choices:
        sa = set(map(float, a.values() if a.choices else [])) or None
        sb = set(map(float, b.values() if b.choices else [])) or None
        if sa is not None and sb is not None:
            common = sorted(sa & sb)
        else:
            finite, other = (sa, b) if sa is not None else (sb, a)
            common = sorted(v for v in finite if other.contains(v))
        if not common:
            raise IncompatibleParamsError(f"parameter {name!r} has disjoint declared ranges")
        default = float(a.default) if float(a.default) in common else common[0]
        return ParamRange.of(*common, default=default)
    if a.is_fixed or b.is_fixed:
        fixed, other = (a, b) if a.is_fixed else (b, a)
        if not other.contains(float(fixed.default)):
            raise IncompatibleParamsError(f"parameter {name!r} fixed outside the other range")
        return fixed
    lo, hi = max(float(a.lo), float(b.lo)), min(float(a.hi), float(b.hi))
    if lo > hi:
        raise IncompatibleParamsError(f"parameter {name!r} has disjoint declared ranges")
    default = float(a.default) if lo <= float(a.default) <= hi else lo
    return ParamRange.interval(lo, hi, default)


def semigroup_add(o1: OdeOperator, o2: OdeOperator, mode: str = "average", name: str = "") -> OdeOperator:
    """Combine two operators coefficient-wise.

    ``average`` halves the sums of B, C and lambda (the defining rule);
    ``sum`` adds them and is associative.
    """
    if mode not in ("average", "sum"):
        raise ValueError(f"unknown addition mode {mode!r}")
    lo, hi = max(o1.window[0], o2.window[0]), min(o1.window[1], o2.window[1])
    if not lo < hi:
        raise EmptyWindowError(f"domain windows {o1.window} and {o2.window} do not overlap")
    params = dict(o1.params)
    for k, r in o2.params.items():
        params[k] = _merge_range(k, params[k], r) if k in params else r
    s = HALF if mode == "average" else Const(1)
    B = add(*_scaled_terms(o1.B, s), *_scaled_terms(o2.B, s))
    C = add(*_scaled_terms(o1.C, s), *_scaled_terms(o2.C, s))
    lam = (o1.lam + o2.lam) * (0.5 if mode == "average" else 1.0)
    index = o1.index if o1.index == o2.index else (o1.index or o2.index)
    if not name:
        joiner = " (+) " if mode == "average" else " (+sum) "
        name = f"{o1.name or '?'}{joiner}{o2.name or '?'}"
    return OdeOperator(B, C, params, lam, (lo, hi), name, index)


def operators_equivalent(o1: OdeOperator, o2: OdeOperator, *, trials: int = 64, seed: int = 0, tol: float = 1e-9):
    """Sampled comparison of (B, C, lambda); returns the worse Comparison."""
    lo, hi = max(o1.window[0], o2.window[0]), min(o1.window[1], o2.window[1])
    params = {**o2.params, **o1.params}
    cb = compare_on_domain(o1.B, o2.B, (lo, hi), trials, params, seed=seed, tol=tol)
    cc = compare_on_domain(add(o1.C, Float(o1.lam)), add(o2.C, Float(o2.lam)), (lo, hi), trials, params, seed=seed, tol=tol)
    worst = cb if cb.worst >= cc.worst else cc
    worst.equal = cb.equal and cc.equal
    return worst


# ---------------------------------------------------------------------------
# general Bessel form y'' + (alpha/x) y' + (beta - mu^2/x^2) y = 0

def bessel_form(o: OdeOperator, mu_name: str = "mu", max_den: int = 64) -> tuple[Fraction, Fraction] | None:
    """Recover (alpha, beta) when B = alpha/x and C + lam = beta - mu^2/x^2, else None."""
    if mu_name not in o.params:
        return None
    lo, hi = o.window
    xs = np.linspace(lo, hi, 9)
    base = o.values()
    alphas, betas = [], []
    for mu in (base[mu_name], base[mu_name] + 0.731):
        vals = {**base, mu_name: mu}
        fb, fc = lambdify(o.B, vals), lambdify(o.C, vals)
        try:
            alphas += [float(x) * fb(float(x)) for x in xs]
            betas += [fc(float(x)) + o.lam + mu * mu / (float(x) ** 2) for x in xs]
        except DomainError:
            return None

    def snap(vs):
        v0 = vs[0]
        if any(abs(v - v0) > 1e-9 * (1 + abs(v0)) for v in vs):
            return None
        f = Fraction(v0).limit_denominator(max_den)
        return f if abs(float(f) - v0) <= 1e-9 * (1 + abs(v0)) else None

    a, b = snap(alphas), snap(betas)
    if a is None or b is None:
        return None
    return a, b


def general_bessel(alpha, beta, *, name: str = "", mu_range: ParamRange | None = None, window=(0.5, 10.0)) -> OdeOperator:
    alpha, beta = Fraction(alpha), Fraction(beta)
    B = div(Const(alpha), X)
    C = add(Const(beta), neg(as_expr("mu^2/x^2")))
    return OdeOperator(B, C, {"mu": mu_range or ParamRange.interval(0, 4, 1)}, 0.0, window, name, "mu")
