"""Ladder operators acting on sampled functions.

up:   z(m) -> (-d/dx + k(x, m+1)) z(m), proportional to z(m+1)
down: z(m) -> (+d/dx + k(x, m)) z(m),   proportional to z(m-1)
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Literal

import numpy as np
from scipy.interpolate import CubicSpline

from ..expr.evaluate import Bindings, compile_expr
from .families import LadderPair

Direction = Literal["up", "down"]
MIN_STEP = 1e-5
DIFF_TOL = 1e-7
RATIO_FLOOR = 1e-2


class GridTooCoarse(ValueError):
    """Numeric differentiation could not reach the requested accuracy."""


@dataclass(frozen=True, eq=False)
class SampledFunction:
    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if g.ndim != 1 or g.shape != v.shape or len(g) < 9:
            raise ValueError("need matching 1-d grid and values with at least 9 samples")
        if np.any(np.diff(g) <= 0):
            raise ValueError("grid must be strictly increasing")
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "_spline", CubicSpline(g, v))

    @classmethod
    def from_function(cls, f: Callable[[float], float], lo: float, hi: float, n: int = 2001) -> "SampledFunction":
        g = np.linspace(lo, hi, n)
        return cls(g, np.array([f(float(x)) for x in g]))

    def __call__(self, x):
        return self._spline(x)

    @property
    def span(self) -> tuple[float, float]:
        return float(self.grid[0]), float(self.grid[-1])

    def derivative(self, *, tol: float = DIFF_TOL) -> tuple[np.ndarray, np.ndarray, float]:
        """(nodes, z', worst error estimate) by Richardson-extrapolated central differences.

        Step h = max(1e-5, local spacing); nodes closer than 4h to an end are dropped.
        """
        g = self.grid
        spacing = np.gradient(g)
        h = np.maximum(MIN_STEP, spacing)
        keep = (g - 4 * h >= g[0] - 1e-12) & (g + 4 * h <= g[-1] + 1e-12)
        x, h = g[keep], h[keep]
        if len(x) == 0:
            raise GridTooCoarse("window too short for the differentiation stencil")
        s = self._spline

        def central(step):
            return (s(x + step) - s(x - step)) / (2 * step)

        d1, d2, d4 = central(h), central(2 * h), central(4 * h)
        r1 = (4 * d1 - d2) / 3
        r2 = (4 * d2 - d4) / 3
        err = np.abs(r1 - r2) / 15
        scale = 1 + float(np.max(np.abs(r1)))
        worst = float(np.max(err))
        if worst > tol * scale:
            i = int(np.argmax(err))
            raise GridTooCoarse(f"derivative error {worst:.3g} exceeds {tol:g}*(1+max|z'|) near x={x[i]:.6g}")
        return x, r1, worst


def _k_values(lp: LadderPair, m, x: np.ndarray) -> np.ndarray:
    f = compile_expr(lp.k_at(m))
    return np.array([f(Bindings({}, float(t))) for t in x])


def apply_ladder(lp: LadderPair, z: SampledFunction, m, direction: Direction = "up", *,
                 tol: float = DIFF_TOL) -> SampledFunction:
    """Apply the raising or lowering operator of ``lp`` to z taken at index m."""
    if direction not in ("up", "down"):
        raise ValueError(f"direction must be 'up' or 'down', got {direction!r}")
    x, dz, _ = z.derivative(tol=tol)
    zx = z.values[np.searchsorted(z.grid, x)]
    if direction == "up":
        out = -dz + _k_values(lp, m + 1, x) * zx
    else:
        out = dz + _k_values(lp, m, x) * zx
    return SampledFunction(x, out)


def compose(lp: LadderPair, z: SampledFunction, m, first: Direction = "up", *, tol: float = DIFF_TOL) -> SampledFunction:
    """Second application returns to index m: up then down, or down then up."""
    if first == "up":
        return apply_ladder(lp, apply_ladder(lp, z, m, "up", tol=tol), m + 1, "down", tol=tol)
    return apply_ladder(lp, apply_ladder(lp, z, m, "down", tol=tol), m - 1, "up", tol=tol)


def composition_multiple(lp: LadderPair, lam: float, m, first: Direction = "up") -> float:
    """Expected scalar: lam + shift - chi(m+1) for up-then-down, lam + shift - chi(m) for down-then-up."""
    return lam + lp.shift_value - lp.chi_at(m + 1 if first == "up" else m)


@dataclass(frozen=True)
class RatioStats:
    mean: float
    spread: float
    points: int
    worst_x: float


def ratio_spread(f: SampledFunction, target: Callable[[float], float], lo: float | None = None,
                 hi: float | None = None) -> RatioStats:
    """Pointwise f/target over nodes where |target| is at least 1% of its maximum.

    spread = (max - min) / |mean|.
    """
    x = f.grid
    sel = np.ones_like(x, dtype=bool)
    if lo is not None:
        sel &= x >= lo - 1e-12
    if hi is not None:
        sel &= x <= hi + 1e-12
    x, v = x[sel], f.values[sel]
    t = np.array([target(float(s)) for s in x])
    big = np.abs(t) >= RATIO_FLOOR * np.max(np.abs(t))
    q = v[big] / t[big]
    mean = float(np.mean(q))
    dev = np.abs(q - mean)
    spread = float((q.max() - q.min()) / abs(mean)) if mean != 0 else math.inf
    return RatioStats(mean, spread, int(big.sum()), float(x[big][int(np.argmax(dev))]))


def multiple_error(f: SampledFunction, z: SampledFunction, expected: float) -> tuple[float, float]:
    """max |f - expected*z| / (1 + max|z|) on f's nodes, with the worst node."""
    zi = z(f.grid)
    err = np.abs(f.values - expected * zi) / (1 + float(np.max(np.abs(zi))))
    i = int(np.argmax(err))
    return float(err[i]), float(f.grid[i])
