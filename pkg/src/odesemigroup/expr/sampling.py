"""Sampled equality: certify symbolic identities numerically."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from scipy.stats import qmc

from .evaluate import Bindings, DomainError, compile_expr
from .nodes import Dep, Expr, as_expr

SYMBOLIC_TOL = 1e-9
DEP_RANGE = (-2.0, 2.0)


@dataclass(frozen=True)
class ParamRange:
    """Declared range of a parameter: an interval, a finite set, or a fixed value."""

    default: float
    lo: float | None = None
    hi: float | None = None
    choices: tuple = ()

    @classmethod
    def fixed(cls, value) -> "ParamRange":
        return cls(default=value)

    @classmethod
    def interval(cls, lo, hi, default=None) -> "ParamRange":
        return cls(default=lo if default is None else default, lo=lo, hi=hi)

    @classmethod
    def of(cls, *choices, default=None) -> "ParamRange":
        return cls(default=choices[0] if default is None else default, choices=tuple(choices))

    @property
    def is_fixed(self) -> bool:
        return not self.choices and (self.lo is None or self.lo == self.hi)

    def values(self) -> list:
        """Representative values: the choices, or the default for intervals."""
        if self.choices:
            return list(self.choices)
        return [self.default]

    def sample(self, u: float) -> float:
        if self.choices:
            return float(self.choices[min(int(u * len(self.choices)), len(self.choices) - 1)])
        if self.is_fixed:
            return float(self.default)
        return float(self.lo) + u * (float(self.hi) - float(self.lo))

    def contains(self, v: float) -> bool:
        if self.choices:
            return any(abs(float(c) - v) <= 1e-12 for c in self.choices)
        if self.is_fixed:
            return abs(float(self.default) - v) <= 1e-12
        return float(self.lo) - 1e-12 <= v <= float(self.hi) + 1e-12

    def to_json(self):
        if self.choices:
            return {"choices": [_jsonable(c) for c in self.choices], "default": _jsonable(self.default)}
        if self.is_fixed:
            return {"fixed": _jsonable(self.default)}
        return {"min": _jsonable(self.lo), "max": _jsonable(self.hi), "default": _jsonable(self.default)}

    @classmethod
    def from_json(cls, spec) -> "ParamRange":
        if isinstance(spec, (int, float)):
            return cls.fixed(spec)
        if "fixed" in spec:
            return cls.fixed(spec["fixed"])
        if "choices" in spec:
            return cls.of(*spec["choices"], default=spec.get("default"))
        return cls.interval(spec["min"], spec["max"], spec.get("default"))


def _jsonable(v):
    if isinstance(v, Fraction):
        return int(v) if v.denominator == 1 else float(v)
    return v


@dataclass
class Comparison:
    """Outcome of a sampled comparison; ``worst`` is the largest relative gap."""

    equal: bool
    worst: float
    witness: dict = field(default_factory=dict)
    tolerance: float = SYMBOLIC_TOL
    trials: int = 0

    def __bool__(self):
        return self.equal


def _dep_orders(*exprs: Expr) -> list[int]:
    return sorted({n.order for e in exprs for n in e.walk() if isinstance(n, Dep)})


def compare_on_domain(
    e1,
    e2,
    window: Sequence[float],
    trials: int = 64,
    params: Mapping[str, object] | None = None,
    *,
    seed: int = 0,
    tol: float = SYMBOLIC_TOL,
    aux: Mapping[str, object] | None = None,
) -> Comparison:
    """Compare ``e1`` and ``e2`` at scrambled-Halton sample points.

    Points cover x in ``window``, every parameter with a declared
    :class:`ParamRange` (plain numbers are held fixed), and y, y', y'' in
    [-2, 2] when present.  The gap at a point is |e1 - e2| / (1 + |e1|).
    """
    e1, e2 = as_expr(e1), as_expr(e2)
    params = dict(params or {})
    ranged = sorted(k for k, v in params.items() if isinstance(v, ParamRange) and not v.is_fixed)
    fixed = {k: (float(v.default) if isinstance(v, ParamRange) else float(v)) for k, v in params.items() if k not in ranged}
    orders = _dep_orders(e1, e2)
    dims = 1 + len(ranged) + len(orders)
    pts = qmc.Halton(d=dims, scramble=True, seed=seed).random(trials)
    f1, f2 = compile_expr(e1), compile_expr(e2)
    lo, hi = float(window[0]), float(window[1])
    worst, witness = 0.0, {}
    for row in pts:
        x = lo + row[0] * (hi - lo)
        pv = dict(fixed)
        for j, name in enumerate(ranged):
            pv[name] = params[name].sample(row[1 + j])
        dep = {o: DEP_RANGE[0] + row[1 + len(ranged) + j] * (DEP_RANGE[1] - DEP_RANGE[0]) for j, o in enumerate(orders)}
        b = Bindings(pv, x, dep.get(0), dep.get(1), dep.get(2), aux or {})
        try:
            v1, v2 = f1(b), f2(b)
        except (ZeroDivisionError, OverflowError, ValueError) as exc:
            raise DomainError(f"evaluation failed at sample point x={x!r}, params={pv}: {exc}") from None
        gap = abs(v1 - v2) / (1.0 + abs(v1))
        if not gap <= worst:
            if gap != gap:
                raise DomainError(f"non-finite value at sample point x={x!r}")
            worst = gap
            witness = {"x": x, **pv, **{"y" + "'" * o: v for o, v in dep.items()}, "lhs": v1, "rhs": v2}
    return Comparison(worst <= tol, worst, witness, tol, trials)


def equivalent_on_domain(e1, e2, window, trials: int = 64, params=None, *, seed: int = 0, tol: float = SYMBOLIC_TOL, aux=None) -> bool:
    """True iff |e1 - e2| <= tol * (1 + |e1|) at every sample point."""
    return compare_on_domain(e1, e2, window, trials, params, seed=seed, tol=tol, aux=aux).equal
