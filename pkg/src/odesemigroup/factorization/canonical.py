"""Reduction y = z * exp(-1/2 integral B) to z'' + (lam + r) z = 0."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ..checks import CheckResult
from ..expr import HALF, Bindings, Expr, Y, add, compare_on_domain, differentiate, lambdify, mul, neg, power
from ..expr.evaluate import compile_expr
from ..lagrangian import envelope, total_derivative
from ..ode_algebra import OdeOperator, Trajectory

TOL_CANONICAL = 1e-6


@dataclass(frozen=True, eq=False)
class CanonicalForm:
    r: Expr
    lam: float
    multiplier: Expr
    source: OdeOperator

    @property
    def index(self) -> str | None:
        return self.source.index

    @property
    def window(self):
        return self.source.window

    @property
    def params(self):
        return self.source.params


def potential(o: OdeOperator) -> Expr:
    """r = C - (B' + B^2/2)/2."""
    B = o.B
    return add(o.C, neg(mul(HALF, add(differentiate(B, "x"), mul(HALF, power(B, 2))))))


def to_second_canonical(o: OdeOperator) -> CanonicalForm:
    return CanonicalForm(potential(o), o.lam, envelope(o, Fraction(-1, 2)), o)


def potential_check(cf: CanonicalForm, *, trials: int = 64, seed: int = 0, tol: float = 1e-9) -> CheckResult:
    """r against C - (B' + B^2/2)/2 recomputed from the source by sampled equality."""
    o = cf.source
    expect = add(o.C, mul(-1, HALF, differentiate(o.B, "x")), mul(Fraction(-1, 4), power(o.B, 2)))
    c = compare_on_domain(cf.r, expect, o.window, trials, o.params, seed=seed, tol=tol)
    return CheckResult(c.equal, c.worst, tol, c.witness, "r = C - (B' + B^2/2)/2")


def multiplier_positive(cf: CanonicalForm, n: int = 201) -> bool:
    lo, hi = cf.window
    for vals in cf.source.parameter_grid():
        f = lambdify(cf.multiplier, vals)
        if any(f(float(x)) <= 0 for x in np.linspace(lo, hi, n)):
            return False
    return True


def transformed_expressions(cf: CanonicalForm) -> tuple[Expr, Expr]:
    """(z, z'') as expressions in x, y, y', y'' with z = y / multiplier."""
    inv = envelope(cf.source, Fraction(1, 2))
    z = mul(Y, inv)
    return z, total_derivative(total_derivative(z))


def transformation_check(cf: CanonicalForm, trajectory: Trajectory, *, tol: float = TOL_CANONICAL) -> CheckResult:
    """z'' + (lam + r) z along a solution, scaled by 1 + |z''| + |(lam + r) z|."""
    z, zpp = transformed_expressions(cf)
    fz, fzpp, fr = compile_expr(z), compile_expr(zpp), compile_expr(cf.r)
    vals = dict(trajectory.params)
    samples = []
    ypp = trajectory.second_at_nodes()
    for x, y, yp, y2 in zip(trajectory.grid[1:-1], trajectory.y[1:-1], trajectory.yp[1:-1], ypp[1:-1]):
        b = Bindings(vals, float(x), float(y), float(yp), float(y2))
        a, c = fzpp(b), (cf.lam + fr(b)) * fz(b)
        res = a + c
        samples.append((abs(res) / (1 + abs(a) + abs(c)), {"x": float(x), "residual": res}))
    return CheckResult.collect(tol, samples, "z'' + (lam + r) z = 0 for z = y / multiplier")


def z_second_derivative_fd(f, x: float, h: float = 1e-3) -> float:
    """Fourth-order central second difference, for cross-checking z''."""
    return (-f(x + 2 * h) + 16 * f(x + h) - 30 * f(x) + 16 * f(x - h) - f(x - 2 * h)) / (12 * h * h)


__all__ = [
    "CanonicalForm",
    "potential",
    "to_second_canonical",
    "potential_check",
    "multiplier_positive",
    "transformed_expressions",
    "transformation_check",
    "z_second_derivative_fd",
]
