"""Bessel functions of the first kind by power series."""

from __future__ import annotations

import math
from functools import lru_cache

X_MAX = 12.0
MU_MAX = 5.0
INT_ORDER_MAX = 12
TRUNCATION = 1e-13


class BesselDomainError(ValueError):
    pass


@lru_cache(maxsize=1024)
def _gamma_shift(mu: float) -> float:
    """1 / Gamma(mu + 1), zero at the poles."""
    if mu + 1 <= 0 and float(mu + 1).is_integer():
        return 0.0
    return 1.0 / math.gamma(mu + 1)


def _check(mu: float, x: float):
    if not 0 < x <= X_MAX:
        raise BesselDomainError(f"x={x!r} outside (0, {X_MAX}]")
    if mu.is_integer():
        if abs(mu) > INT_ORDER_MAX:
            raise BesselDomainError(f"integer order {mu!r} outside [-{INT_ORDER_MAX}, {INT_ORDER_MAX}]")
    elif not -MU_MAX <= mu <= MU_MAX:
        raise BesselDomainError(f"order {mu!r} outside [-{MU_MAX}, {MU_MAX}]")


def _terms(mu: float, x: float):
    """Series terms (x/2)^(2k+mu) (-1)^k / (k! Gamma(k+mu+1)) with their exponents."""
    h = 0.5 * x
    q = -h * h
    t = h**mu * _gamma_shift(mu)
    k = 0
    # the k-th term carries 1/Gamma(k+mu+1); when mu is a negative non-integer
    # the recursion stays valid, when the start is a pole we begin at the first
    # nonzero term instead
    if t == 0.0:
        k = int(-mu)
        t = (-1) ** k * h ** (2 * k + mu) / (math.factorial(k) * math.gamma(k + mu + 1))
    while True:
        yield k, t
        denom = (k + 1) * (k + 1 + mu)
        nxt = t * q / denom
        # once the ratio is below 1/2 the remaining tail is bounded by 2|next term|
        ratio = abs(q / denom)
        k += 1
        t = nxt
        if ratio < 0.5 and 2 * abs(t) < TRUNCATION * 1e-3:
            yield k, t
            return


def bessel_j(mu: float, x: float) -> float:
    """J_mu(x) for x in (0, 12], |mu| <= 5 (integers up to 12); negative integer orders use J_-n = (-1)^n J_n."""
    mu, x = float(mu), float(x)
    _check(mu, x)
    if mu < 0 and mu.is_integer():
        n = int(-mu)
        return (-1) ** n * bessel_j(n, x)
    return math.fsum(t for _, t in _terms(mu, x))


def bessel_j_derivative(mu: float, x: float, order: int = 1) -> float:
    """d^order/dx^order J_mu(x) by termwise differentiation of the series."""
    mu, x = float(mu), float(x)
    _check(mu, x)
    if mu < 0 and mu.is_integer():
        n = int(-mu)
        return (-1) ** n * bessel_j_derivative(n, x, order)
    total = []
    for k, t in _terms(mu, x):
        p = 2 * k + mu
        c = 1.0
        for j in range(order):
            c *= p - j
        total.append(t * c / x**order)
    return math.fsum(total)


def bessel_residual(mu: float, x: float) -> float:
    """J'' + J'/x + (1 - mu^2/x^2) J, which vanishes for an exact J_mu."""
    j = bessel_j(mu, x)
    return bessel_j_derivative(mu, x, 2) + bessel_j_derivative(mu, x, 1) / x + (1 - mu * mu / (x * x)) * j


def first_zero(mu: float, lo: float, hi: float, tol: float = 1e-15) -> float:
    """Bisection root of J_mu in [lo, hi] (a sign change is required)."""
    flo, fhi = bessel_j(mu, lo), bessel_j(mu, hi)
    if flo * fhi > 0:
        raise ValueError("no sign change in the bracket")
    while hi - lo > tol * max(1.0, abs(lo)):
        mid = 0.5 * (lo + hi)
        fm = bessel_j(mu, mid)
        if fm == 0:
            return mid
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)
