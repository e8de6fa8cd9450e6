"""Numeric solutions of y'' + B y' + (C + lam) y = 0."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicHermiteSpline

from ..expr import DomainError, Expr, add, differentiate, lambdify, mul, neg
from .operator import OdeOperator, ode_residual

RTOL = 1e-10
ATOL = 1e-12
MAX_STEP_FRACTION = 1 / 1500


class IntegrationError(RuntimeError):
    def __init__(self, message: str, last_x: float):
        self.last_x = last_x
        super().__init__(f"{message} (last good x = {last_x!r})")


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Sampled solution with C^1 cubic Hermite interpolation between nodes.

    Higher derivatives are reconstructed from (y, y') through the equation,
    so ``derivative(x, k)`` is available for any k.
    """

    operator: OdeOperator
    grid: np.ndarray
    y: np.ndarray
    yp: np.ndarray
    initial: tuple[float, float, float]
    params: Mapping[str, float] = field(default_factory=dict)

    @cached_property
    def _spline(self) -> CubicHermiteSpline:
        return CubicHermiteSpline(self.grid, self.y, self.yp)

    @cached_property
    def _fb(self):
        return lambdify(self.operator.B, self.params)

    @cached_property
    def _fc(self):
        return lambdify(add(self.operator.C, float(self.operator.lam)), self.params)

    @cached_property
    def _higher(self) -> list[tuple[Expr, Expr]]:
        # y^(k) = a_k(x) y + b_k(x) y'
        p0 = neg(add(self.operator.C, float(self.operator.lam)))
        p1 = neg(self.operator.B)
        return [(p0, p1)]

    def _coefficients(self, order: int) -> tuple[Expr, Expr]:
        rows = self._higher
        while len(rows) < order - 1:
            a, b = rows[-1]
            p0, p1 = rows[0]
            rows.append((
                add(differentiate(a, "x"), mul(b, p0)),
                add(a, differentiate(b, "x"), mul(b, p1)),
            ))
        return rows[order - 2]

    @property
    def span(self) -> tuple[float, float]:
        return float(self.grid[0]), float(self.grid[-1])

    def _check(self, x: float):
        lo, hi = self.span
        if not lo - 1e-12 <= x <= hi + 1e-12:
            raise ValueError(f"x={x!r} outside trajectory span [{lo!r}, {hi!r}]")

    def value(self, x: float) -> float:
        self._check(x)
        return float(self._spline(x))

    def slope(self, x: float) -> float:
        self._check(x)
        return float(self._spline(x, 1))

    def second(self, x: float) -> float:
        """y'' reconstructed as -B y' - C y - lam y."""
        y, yp = self.value(x), self.slope(x)
        return -self._fb(x) * yp - self._fc(x) * y

    def derivative(self, x: float, order: int = 0) -> float:
        x = float(x)
        if order == 0:
            return self.value(x)
        if order == 1:
            return self.slope(x)
        if order == 2:
            return self.second(x)
        a, b = self._coefficients(order)
        p = self.params
        return lambdify(a, p)(x) * self.value(x) + lambdify(b, p)(x) * self.slope(x)

    __call__ = value

    def second_at_nodes(self) -> np.ndarray:
        return np.array([-self._fb(float(x)) * yp - self._fc(float(x)) * y for x, y, yp in zip(self.grid, self.y, self.yp)])

    def residuals(self) -> np.ndarray:
        """ode_residual at every node, with y'' from the integrator's right-hand side."""
        ypp = self.second_at_nodes()
        return np.array([
            ode_residual(self.operator, float(y), float(yp), float(z), float(x), self.params)
            for x, y, yp, z in zip(self.grid, self.y, self.yp, ypp)
        ])

    def restrict(self, lo: float, hi: float) -> "Trajectory":
        mask = (self.grid >= lo - 1e-12) & (self.grid <= hi + 1e-12)
        if mask.sum() < 4:
            raise ValueError(f"restriction to [{lo!r}, {hi!r}] keeps fewer than 4 nodes")
        return Trajectory(self.operator, self.grid[mask], self.y[mask], self.yp[mask], self.initial, self.params)

    def zero_free_intervals(self) -> list[tuple[float, float]]:
        """Maximal node ranges on which y keeps one strict sign."""
        s = np.sign(self.y)
        out, start = [], None
        for i, v in enumerate(s):
            if v == 0 or (start is not None and v != s[start]):
                if start is not None and i - 1 > start:
                    out.append((float(self.grid[start]), float(self.grid[i - 1])))
                start = None if v == 0 else i
            elif start is None:
                start = i
        if start is not None and len(s) - 1 > start:
            out.append((float(self.grid[start]), float(self.grid[-1])))
        return out

    def longest_zero_free(self) -> "Trajectory":
        spans = self.zero_free_intervals()
        if not spans:
            raise ValueError("solution has no zero-free interval")
        lo, hi = max(spans, key=lambda s: s[1] - s[0])
        return self.restrict(lo, hi)


def integrate(
    o: OdeOperator,
    x0: float,
    y0: float,
    yp0: float,
    x_end: float,
    params: Mapping[str, float] | None = None,
    *,
    rtol: float = RTOL,
    atol: float = ATOL,
    max_step: float | None = None,
    nodes=None,
) -> Trajectory:
    """Adaptive Runge-Kutta (8th order Dormand-Prince) solution from x0 to x_end.

    Nodes are the accepted steps unless ``nodes`` is given, in which case the
    solution is reported there from the integrator's dense output (useful to
    put two solutions on one grid).
    """
    lo, hi = o.window
    a, b = sorted((float(x0), float(x_end)))
    if a < lo - 1e-12 or b > hi + 1e-12:
        raise ValueError(f"[{a!r}, {b!r}] is not inside the operator window {o.window}")
    if a == b:
        raise ValueError("integration interval is empty")
    vals = o.values(params)
    fb = lambdify(o.B, vals)
    fc = lambdify(add(o.C, float(o.lam)), vals)
    last = {"x": float(x0)}

    def rhs(x, s):
        try:
            d = [s[1], -fb(x) * s[1] - fc(x) * s[0]]
        except DomainError as exc:
            raise IntegrationError(f"coefficient evaluation failed at x={x!r}: {exc}", last["x"]) from None
        last["x"] = float(x)
        return d

    if max_step is None:
        max_step = (hi - lo) * MAX_STEP_FRACTION
    sol = solve_ivp(rhs, (float(x0), float(x_end)), [float(y0), float(yp0)], method="DOP853",
                    rtol=rtol, atol=atol, max_step=max_step,
                    t_eval=None if nodes is None else np.asarray(nodes, dtype=float))
    if sol.status != 0:
        good = float(sol.t[-1]) if len(sol.t) else float(x0)
        raise IntegrationError(f"integration stopped: {sol.message}", good)
    t, y, yp = sol.t, sol.y[0], sol.y[1]
    if t[0] > t[-1]:
        t, y, yp = t[::-1], y[::-1], yp[::-1]
    if not (np.all(np.isfinite(y)) and np.all(np.isfinite(yp))):
        raise IntegrationError("solution overflowed", float(t[np.argmax(~np.isfinite(y))]))
    return Trajectory(o, np.ascontiguousarray(t), np.ascontiguousarray(y), np.ascontiguousarray(yp),
                      (float(x0), float(y0), float(yp0)), vals)


def integrate_across(o: OdeOperator, y0: float, yp0: float, params=None, **kw) -> Trajectory:
    """Solution over the whole window from data at its left end."""
    lo, hi = o.window
    return integrate(o, lo, y0, yp0, hi, params, **kw)
