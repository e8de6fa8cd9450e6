"""Plane waves exp(i k.r) as translation eigenfunctions and their Bessel coefficients.

Complex values are carried as (re, im) pairs of floats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from ..checks import CheckResult
from .bessel import X_MAX

GRADIENT_CONVENTION = "-i grad phi = k phi"
TOL_PLANE = 1e-10
TOL_COEFF = 1e-8
N_START = 32
N_CAP = 4096
N_MAX = 12


class QuadratureError(RuntimeError):
    pass


def _phase(t: float) -> tuple[float, float]:
    return math.cos(t), math.sin(t)


def _cmul(a, b):
    return a[0] * b[0] - a[1] * b[1], a[0] * b[1] + a[1] * b[0]


def plane_wave(k: Sequence[float], r: Sequence[float]) -> tuple[float, float]:
    return _phase(k[0] * r[0] + k[1] * r[1])


def _sample_points(n: int) -> list[tuple[float, float]]:
    # deterministic spiral over a disc of radius 5
    golden = math.pi * (3 - math.sqrt(5))
    return [(5 * math.sqrt((i + 0.5) / n) * math.cos(i * golden), 5 * math.sqrt((i + 0.5) / n) * math.sin(i * golden))
            for i in range(n)]


def _gradient_fd(k, r, axis: int, h: float = 1e-3) -> tuple[float, float]:
    """Richardson-extrapolated central difference of phi along one axis."""

    def d(step):
        e = [0.0, 0.0]
        e[axis] = step
        p = plane_wave(k, (r[0] + e[0], r[1] + e[1]))
        q = plane_wave(k, (r[0] - e[0], r[1] - e[1]))
        return ((p[0] - q[0]) / (2 * step), (p[1] - q[1]) / (2 * step))

    levels = [d(h / 2**j) for j in range(4)]
    # Richardson table on h^2, h^4, h^6
    for p in (4, 16, 64):
        levels = [((p * b[0] - a[0]) / (p - 1), (p * b[1] - a[1]) / (p - 1)) for a, b in zip(levels, levels[1:])]
    return levels[0]


@dataclass
class PlaneWaveReport:
    translation: CheckResult
    gradient: CheckResult
    convention: str = GRADIENT_CONVENTION
    points: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.translation.passed and self.gradient.passed


def plane_wave_irrep_check(k: Sequence[float], a: Sequence[float], n: int = 64, *, tol: float = TOL_PLANE) -> PlaneWaveReport:
    """phi(r + a) = e^{i k.a} phi(r) and grad phi = i k phi at n sample points."""
    k = (float(k[0]), float(k[1]))
    a = (float(a[0]), float(a[1]))
    pts = _sample_points(n)
    shift = _phase(k[0] * a[0] + k[1] * a[1])
    trans, grad = [], []
    for r in pts:
        lhs = plane_wave(k, (r[0] + a[0], r[1] + a[1]))
        rhs = _cmul(shift, plane_wave(k, r))
        trans.append((math.hypot(lhs[0] - rhs[0], lhs[1] - rhs[1]), {"x": r[0], "y": r[1]}))
        phi = plane_wave(k, r)
        for axis in (0, 1):
            g = _gradient_fd(k, r, axis)
            # i k_axis phi
            expect = (-k[axis] * phi[1], k[axis] * phi[0])
            err = math.hypot(g[0] - expect[0], g[1] - expect[1]) / (1 + abs(k[axis]))
            grad.append((err, {"x": r[0], "y": r[1], "axis": "xy"[axis]}))
    return PlaneWaveReport(
        CheckResult.collect(tol, trans, "phi(r+a) = exp(i k.a) phi(r)"),
        CheckResult.collect(tol, grad, f"grad phi = i k phi ({GRADIENT_CONVENTION})"),
        GRADIENT_CONVENTION,
        pts,
    )


def _trapezoid(x: float, n: int, N: int) -> float:
    # real part of (1/2pi) int exp(i(x sin t - n t)) dt; the imaginary part vanishes by symmetry
    return math.fsum(math.cos(x * math.sin(2 * math.pi * j / N) - n * 2 * math.pi * j / N) for j in range(N)) / N


def jacobi_anger_coefficient(x: float, n: int, *, tol: float = TOL_COEFF * 1e-2, cap: int = N_CAP) -> float:
    """c_n(x) = (1/2pi) int_0^{2pi} exp(i x sin t) exp(-i n t) dt by the periodic trapezoid rule.

    The node count doubles from 32 until successive values agree to ``tol``.
    """
    x = float(x)
    if not 0 < x <= X_MAX:
        raise ValueError(f"x={x!r} outside (0, {X_MAX}]")
    N = N_START
    prev = _trapezoid(x, n, N)
    while N < cap:
        N *= 2
        cur = _trapezoid(x, n, N)
        if abs(cur - prev) <= tol:
            return cur
        prev = cur
    raise QuadratureError(f"trapezoid rule did not converge by {cap} nodes for x={x}, n={n}")


def plane_wave_bessel_coefficients(x: float, n_max: int) -> list[float]:
    """[c_0, ..., c_{n_max}] for exp(i x sin t) = sum_n c_n exp(i n t)."""
    if not 0 <= n_max <= N_MAX:
        raise ValueError(f"n_max must be in [0, {N_MAX}]")
    return [jacobi_anger_coefficient(x, n) for n in range(n_max + 1)]


def reconstruction_error(x: float, n_max: int = 8, thetas: int = 64) -> float:
    """max over t of |sum_{|n|<=n_max} c_n e^{i n t} - e^{i x sin t}|."""
    c = {n: jacobi_anger_coefficient(x, n) for n in range(-n_max, n_max + 1)}
    worst = 0.0
    for j in range(thetas):
        t = 2 * math.pi * j / thetas
        re = math.fsum(c[n] * math.cos(n * t) for n in c)
        im = math.fsum(c[n] * math.sin(n * t) for n in c)
        worst = max(worst, math.hypot(re - math.cos(x * math.sin(t)), im - math.sin(x * math.sin(t))))
    return worst
