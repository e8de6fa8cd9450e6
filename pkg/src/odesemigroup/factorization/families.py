"""Factorizability: match r(x, m) against a catalog of ladder families.

Each family is a template for r with numeric placeholders plus the ladder
(k, chi, shift) that factorizes it.  Matching fits the placeholders by
least squares, snaps them to small rationals, then certifies the match by
sampled equality and by the ladder consistency identity

    -k'(x, m+1) - k(x, m+1)^2 - chi(m+1) == r(x, m) - shift.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.optimize import least_squares

from ..checks import CheckResult
from ..expr import (
    DomainError,
    Expr,
    Float,
    Parameter,
    ParamRange,
    add,
    compare_on_domain,
    const,
    differentiate,
    neg,
    parameters,
    parse,
    power,
    substitute,
)
from ..expr.evaluate import Bindings, compile_expr
from ..ode_algebra import OdeOperator
from .canonical import CanonicalForm, to_second_canonical

INDEX = "m"
CONSISTENCY_M = (0, 0.5, 1, 2, 3)
FIT_POINTS = 16
SNAP_DEN = 64
NOT_FACTORIZABLE = "r outside catalog families"


@dataclass(frozen=True)
class Family:
    tag: str
    r: Expr
    k: Expr
    chi: Expr
    shift: Expr
    domains: Mapping[str, tuple[float, float]]

    @property
    def placeholders(self) -> list[str]:
        return sorted(self.domains)

    @classmethod
    def from_json(cls, item: dict) -> "Family":
        doms = {k: (float(v[0]), float(v[1])) for k, v in item["placeholder_domains"].items()}
        fam = cls(item["tag"], parse(item["r_template"]), parse(item["k_template"]),
                  parse(item["chi_template"]), parse(item.get("shift_template", "0")), doms)
        extra = set().union(*(parameters(e) for e in (fam.r, fam.k, fam.chi, fam.shift))) - set(doms) - {INDEX}
        if extra:
            raise ValueError(f"family {fam.tag!r} uses undeclared placeholders {sorted(extra)}")
        return fam


def load_families(path: str | Path | None = None) -> list[Family]:
    if path is None:
        text = resources.files(__package__).joinpath("families.json").read_text()
    else:
        text = Path(path).read_text()
    return [Family.from_json(item) for item in json.loads(text)]


@dataclass(frozen=True)
class LadderPair:
    """k(x, m), chi(m) and the constant shift of r they factorize."""

    k: Expr
    chi: Expr
    tag: str
    shift: Expr = field(default_factory=lambda: const(0))
    r: Expr | None = None

    def k_at(self, m) -> Expr:
        return substitute(self.k, {INDEX: _num(m)})

    def chi_at(self, m) -> float:
        return float(compile_expr(substitute(self.chi, {INDEX: _num(m)}))(Bindings()))

    @property
    def shift_value(self) -> float:
        return float(compile_expr(self.shift)(Bindings()))

    def identity_sides(self, m) -> tuple[Expr, Expr]:
        """(-k'(m+1) - k(m+1)^2 - chi(m+1), r(m) - shift)."""
        k1 = self.k_at(_add1(m))
        chi1 = substitute(self.chi, {INDEX: _num(_add1(m))})
        lhs = add(neg(differentiate(k1, "x")), neg(power(k1, 2)), neg(chi1))
        rhs = add(substitute(self.r, {INDEX: _num(m)}), neg(self.shift))
        return lhs, rhs


def _num(m) -> Expr:
    if isinstance(m, float) and not m.is_integer():
        f = Fraction(m).limit_denominator(SNAP_DEN)
        return const(f) if float(f) == m else Float(m)
    return const(Fraction(m))


def _add1(m):
    return m + 1


def consistency_check(lp: LadderPair, window: Sequence[float], m_values: Iterable = CONSISTENCY_M, *,
                      r: Expr | None = None, tol: float = 1e-9, seed: int = 0, params=None) -> CheckResult:
    """The ladder identity at each index value, by sampled equality in x."""
    worst, witness, ok = 0.0, {}, True
    base = lp if r is None else LadderPair(lp.k, lp.chi, lp.tag, lp.shift, r)
    if base.r is None:
        raise ValueError("ladder has no r to check against")
    for m in m_values:
        lhs, rhs = base.identity_sides(m)
        c = compare_on_domain(lhs, rhs, window, 48, params, seed=seed, tol=tol)
        ok = ok and c.equal
        if c.worst >= worst:
            worst, witness = c.worst, {**c.witness, "m": m}
    return CheckResult(ok, worst, tol, witness, "-k'(m+1) - k(m+1)^2 - chi(m+1) = r(m) - shift")


@dataclass
class FactorizationVerdict:
    factorizable: bool
    family: str | None = None
    ladder: LadderPair | None = None
    reason: str = ""
    placeholders: dict = field(default_factory=dict)
    reparametrized: bool = False
    consistency: CheckResult | None = None


def _snap(v: float):
    f = Fraction(v).limit_denominator(SNAP_DEN)
    return f if abs(float(f) - v) <= 1e-8 * (1 + abs(v)) else float(v)


def _index_samples(rng: ParamRange | None) -> list[float]:
    if rng is None:
        return [0.0]
    if rng.choices:
        return [float(c) for c in rng.choices]
    if rng.is_fixed:
        return [float(rng.default)]
    lo, hi = float(rng.lo), float(rng.hi)
    return [lo + (hi - lo) * t for t in (0.0, 0.125, 0.25, 0.5, 0.75)]


def _fit(fam: Family, r_vals: np.ndarray, xs: np.ndarray, ms: Sequence[float]):
    names = fam.placeholders
    f = compile_expr(fam.r)

    def resid(theta):
        p = dict(zip(names, theta))
        out = np.empty_like(r_vals)
        for j, x in enumerate(xs):
            for k, m in enumerate(ms):
                out[j, k] = f(Bindings({**p, INDEX: m}, float(x)))
        return ((out - r_vals) / (1 + np.abs(r_vals))).ravel()

    starts = itertools.product(*[
        (0.5 * (lo + hi), min(max(1.0, lo), hi), 0.25 * lo + 0.75 * hi) for lo, hi in (fam.domains[n] for n in names)
    ])
    best = None
    lo_b = [fam.domains[n][0] for n in names]
    hi_b = [fam.domains[n][1] for n in names]
    for x0 in starts:
        try:
            sol = least_squares(resid, np.array(x0, dtype=float), bounds=(lo_b, hi_b), xtol=1e-15, ftol=1e-15, gtol=1e-15)
        except (DomainError, ValueError, OverflowError, ZeroDivisionError):
            continue
        if best is None or sol.cost < best.cost:
            best = sol
        if best.cost < 1e-24:
            break
    return None if best is None else dict(zip(names, (_snap(float(v)) for v in best.x)))


def _bind(e: Expr, values: Mapping) -> Expr:
    return substitute(e, {k: (Float(v) if isinstance(v, float) else const(v)) for k, v in values.items()})


def classify(r: Expr, window: Sequence[float], *, index_range: ParamRange | None = None,
             families: Sequence[Family] | None = None, seed: int = 0, reparametrized: bool = False) -> FactorizationVerdict:
    """Classify r(x, m) (index already named m; no other free parameters)."""
    families = load_families() if families is None else families
    free = parameters(r) - {INDEX}
    if free:
        raise ValueError(f"r has unbound parameters {sorted(free)}")
    has_index = INDEX in parameters(r)
    ms = _index_samples(index_range) if has_index else [0.0]
    xs = np.linspace(window[0], window[1], FIT_POINTS + 2)[1:-1]
    fr = compile_expr(r)
    try:
        r_vals = np.array([[fr(Bindings({INDEX: m}, float(x))) for m in ms] for x in xs])
    except (DomainError, ZeroDivisionError, OverflowError) as exc:
        return FactorizationVerdict(False, reason=f"r cannot be evaluated on the window: {exc}")
    for fam in families:
        theta = _fit(fam, r_vals, xs, ms)
        if theta is None:
            continue
        r_fit = _bind(fam.r, theta)
        if has_index:
            same = compare_on_domain(r, r_fit, window, 64, {INDEX: index_range or 0.0}, seed=seed)
        else:
            same = compare_on_domain(r, substitute(r_fit, {INDEX: const(0)}), window, 64, seed=seed)
        if not same.equal:
            continue
        lp = LadderPair(_bind(fam.k, theta), _bind(fam.chi, theta), fam.tag, _bind(fam.shift, theta), r_fit)
        cons = consistency_check(lp, window, seed=seed)
        if cons.passed:
            reason = f"r matches the {fam.tag} family"
            if reparametrized:
                reason += " with the index pinned (ladder index m counts from the given order)"
            return FactorizationVerdict(True, fam.tag, lp, reason, theta, reparametrized, cons)
    return FactorizationVerdict(False, reason=NOT_FACTORIZABLE)


def _pinned_potential(cf: CanonicalForm, overrides: Mapping[str, float] | None, rename_index: bool) -> Expr:
    o = cf.source
    vals = {}
    for k, rng in o.params.items():
        if rename_index and k == o.index:
            continue
        v = (overrides or {}).get(k, rng.default)
        vals[k] = v if isinstance(v, (int, Fraction)) else _snap(float(v))
    r = _bind(cf.r, vals)
    if rename_index and o.index:
        r = substitute(r, {o.index: Parameter(INDEX)})
    return r


def classify_factorization(cf: CanonicalForm, *, overrides: Mapping[str, float] | None = None,
                           families: Sequence[Family] | None = None, seed: int = 0) -> FactorizationVerdict:
    """Verdict for a canonical form.

    Non-index parameters are held at their defaults (or ``overrides``).  The
    operator's index parameter is first matched as the family index m; if
    that fails it is pinned too and m counts ladder steps from it.
    """
    o = cf.source
    if o.index:
        r = _pinned_potential(cf, overrides, True)
        v = classify(r, o.window, index_range=o.params[o.index], families=families, seed=seed)
        if v.factorizable:
            return v
    r = _pinned_potential(cf, overrides, False)
    return classify(r, o.window, families=families, seed=seed, reparametrized=bool(o.index))


def canonical_from_potential(r, window, params: Mapping[str, ParamRange] | None = None, index: str | None = None,
                             lam: float = 0.0) -> CanonicalForm:
    """Canonical form of z'' + (lam + r) z = 0 given r directly."""
    o = OdeOperator(const(0), r, params or {}, lam, tuple(window), "canonical", index)
    return to_second_canonical(o)

