"""Invariant batteries behind ``verify``: per-operator checks and global suites."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .checks import CheckResult
from .expr import compare_on_domain, equivalent_on_domain, parse, render
from .factorization import (
    SampledFunction,
    apply_ladder,
    bessel_j,
    bessel_residual,
    classify_factorization,
    compose,
    composition_multiple,
    first_zero,
    jacobi_anger_coefficient,
    multiple_error,
    multiplier_positive,
    plane_wave_irrep_check,
    potential_check,
    ratio_spread,
    to_second_canonical,
    transformation_check,
)
from .lagrangian import (
    NULL_KINDS,
    STANDARD_KINDS,
    TOL_GAUGE,
    TOL_NULL,
    DegeneratePairError,
    TestPath,
    auxiliary_solution,
    closure_check,
    el_agreement,
    el_battery,
    el_on_solution,
    gauge_check,
    gauge_function,
    helmholtz_third_condition,
    independent_solution,
    nonstandard_lagrangian,
    null_lagrangian,
    ode_form,
    riccati_solution,
    standard_lagrangian,
    weighted_ode_form,
)
from .ode_algebra import (
    DERIVATION_ROWS,
    CatalogEntry,
    OdeOperator,
    Registry,
    bessel_form,
    integrate_across,
    operators_equivalent,
    row_for,
    semigroup_add,
)
from .report import PLUMBING, Record

ANCHOR = {
    "closure": "standard Lagrangian coefficients obey f1' = B f1 and f2'/2 - f3 = C f1",
    "el": "Euler-Lagrange equation of the standard Lagrangians reproduces the ODE",
    "agree": "minimal, middle and maximal Lagrangians give the same Euler-Lagrange residual",
    "null": "null Lagrangians have an identically vanishing Euler-Lagrange expression",
    "gauge": "gauge function Phi with dPhi/dx equal to the null Lagrangian",
    "null_zero": "operators with B = 0 have a vanishing maximal null Lagrangian",
    "helmholtz": "third Helmholtz condition fails for the bare ODE when B != 0 and holds with the E_s weight",
    "riccati": "u = 3 vbar'/vbar + 2B solves the Riccati equation",
    "nsl": "nonstandard Lagrangian with auxiliary solution vbar reproduces the ODE",
    "degenerate": "nonstandard Lagrangian is singular when y equals vbar",
    "canonical": "second canonical form z'' + (lam + r) z = 0 with r = C - (B' + B^2/2)/2",
    "canonical_r": "regular Bessel with lam = 1 has r = -(mu^2 - 1/4)/x^2",
    "classify": "factorization verdict against the family catalog",
    "ladder": "ladder operators map sqrt(x) J_mu to sqrt(x) J_(mu +- 1)",
    "table": "averaging two Bessel equations yields the named Bessel/Euler equation",
    "euler": "regular plus modified Bessel averages to the Euler equation",
    "legendre": "regular plus associated Legendre averages to m^2/2 in the second pole term",
    "plane": "plane waves exp(i k.r) transform by exp(i k.a) under translation by a",
    "jacobi": "Fourier coefficients of exp(i x sin t) equal J_n(x)",
    "bessel": "power-series J_mu satisfies Bessel's equation",
}


@dataclass(frozen=True)
class Tolerances:
    sym: float = 1e-9
    el: float = 1e-6
    agree: float = 1e-8
    nsl: float = 1e-5
    riccati: float = 1e-6
    canonical: float = 1e-6
    ladder: float = 1e-5
    null: float = TOL_NULL
    gauge: float = TOL_GAUGE


@dataclass
class Battery:
    tol: Tolerances = field(default_factory=Tolerances)
    seed: int = 0

    # per operator -----------------------------------------------------------

    def operator_checks(self, entry: CatalogEntry, registry: Registry) -> list[Record]:
        o, name = entry.operator, entry.name
        out: list[Record] = []
        if registry.is_overridden(name):
            ref = registry.reference(name)
            c = operators_equivalent(o, ref.operator, seed=self.seed, tol=self.tol.sym)
            out.append(Record.flag("registry-override", name, PLUMBING, c.equal,
                                   "override agrees with the shipped entry" if c.equal else "override differs from the shipped entry",
                                   c.witness, c.worst, self.tol.sym))
        traj = integrate_across(o, 1.0, 0.0)
        out += self._lagrangian_checks(name, o, traj)
        out += self._auxiliary_checks(name, o)
        out += self._canonical_checks(entry, traj)
        return out

    def _lagrangian_checks(self, name: str, o: OdeOperator, traj) -> list[Record]:
        out = []
        specs = [standard_lagrangian(o, k) for k in STANDARD_KINDS]
        for s in specs:
            out.append(Record.of(f"closure-{s.kind}", name, ANCHOR["closure"],
                                 closure_check(s, seed=self.seed, tol=self.tol.sym)))
            out.append(Record.of(f"el-solution-{s.kind}", name, ANCHOR["el"], el_on_solution(s, traj, tol=self.tol.el)))
        out.append(Record.of("el-agreement", name, ANCHOR["agree"], el_agreement(specs, tol=self.tol.agree)))
        b_zero = equivalent_on_domain(o.B, 0, o.window, params=o.params, seed=self.seed)
        for k in NULL_KINDS:
            nl = null_lagrangian(o, k)
            out.append(Record.of(f"null-{k}", name, ANCHOR["null"], el_battery(nl, tol=self.tol.null)))
            out.append(Record.of(f"gauge-{k}", name, ANCHOR["gauge"],
                                 gauge_check(gauge_function(nl), nl, tol=self.tol.gauge), render(gauge_function(nl).phi)))
        if b_zero:
            nm = null_lagrangian(o, "null_max")
            c = compare_on_domain(nm.body, 0, o.window, params=o.params, seed=self.seed, tol=self.tol.sym)
            out.append(Record.flag("null-max-vanishes", name, ANCHOR["null_zero"], c.equal, render(nm.body),
                                   c.witness, c.worst, self.tol.sym))
        bare = helmholtz_third_condition(ode_form(o), o.window, o.params, seed=self.seed, tol=self.tol.sym)
        weighted = helmholtz_third_condition(weighted_ode_form(o), o.window, o.params, seed=self.seed, tol=self.tol.sym)
        ok = weighted.passed and (bare.passed == b_zero)
        out.append(Record.flag(
            "helmholtz-dichotomy", name, ANCHOR["helmholtz"], ok,
            f"bare form {'passes' if bare.passed else 'fails'}, weighted form {'passes' if weighted.passed else 'fails'}",
            {"bare_worst": bare.worst, "weighted_worst": weighted.worst, "B_is_zero": b_zero},
            weighted.worst, self.tol.sym))
        return out

    def _auxiliary_checks(self, name: str, o: OdeOperator) -> list[Record]:
        out = []
        vbar = auxiliary_solution(o)
        rs = riccati_solution(o, vbar)
        out.append(Record.of("riccati", name, ANCHOR["riccati"], rs.check(tol=self.tol.riccati),
                             f"vbar from (1, 0) at x={vbar.initial[0]:g}, span [{vbar.span[0]:.6g}, {vbar.span[1]:.6g}]"))
        L = nonstandard_lagrangian(o, vbar)
        y = independent_solution(o, vbar)
        out.append(Record.of("nonstandard-el", name, ANCHOR["nsl"], el_battery(L, [y], tol=self.tol.nsl, params=vbar.params)))
        try:
            el_battery(L, [vbar], tol=self.tol.nsl, params=vbar.params)
            raised = False
        except DegeneratePairError:
            raised = True
        out.append(Record.flag("nonstandard-degenerate", name, ANCHOR["degenerate"], raised,
                               "DegeneratePairError raised for y = vbar" if raised else "no error for y = vbar"))
        return out

    def _canonical_checks(self, entry: CatalogEntry, traj) -> list[Record]:
        o, name = entry.operator, entry.name
        out = []
        cf = to_second_canonical(o)
        out.append(Record.of("canonical-potential", name, ANCHOR["canonical"],
                             potential_check(cf, seed=self.seed, tol=self.tol.sym), f"r = {render(cf.r)}"))
        pos = multiplier_positive(cf)
        out.append(Record.flag("canonical-multiplier", name, ANCHOR["canonical"], pos,
                               f"multiplier = {render(cf.multiplier)} {'positive' if pos else 'not positive'} on the window"))
        out.append(Record.of("canonical-transform", name, ANCHOR["canonical"],
                             transformation_check(cf, traj, tol=self.tol.canonical)))
        ecf = to_second_canonical(o.eigen_form())
        if entry.alpha is not None:
            a = Fraction(entry.alpha)
            c = a * a / 4 - a / 2
            expect = parse(f"-(mu^2 + ({c}))/x^2") if c else parse("-mu^2/x^2")
            cmp = compare_on_domain(ecf.r, expect, o.window, 64, o.params, seed=self.seed, tol=self.tol.sym)
            shown = "-(mu^2 - 1/4)/x^2" if c == Fraction(-1, 4) else render(expect)
            out.append(Record.flag("canonical-r", name, ANCHOR["canonical_r"] if a == 1 else ANCHOR["canonical"],
                                   cmp.equal, f"r = {shown} with lam = {ecf.lam:g}", cmp.witness, cmp.worst, self.tol.sym))
        v = classify_factorization(ecf, seed=self.seed)
        sound = (not v.factorizable) or (v.ladder is not None and v.consistency is not None and v.consistency.passed)
        need_inverse_square = entry.alpha is not None
        ok = sound and (v.family == "inverse-square" or not need_inverse_square)
        if v.factorizable:
            detail = f"{v.family}: k = {render(v.ladder.k)}, chi = {render(v.ladder.chi)}, shift = {render(v.ladder.shift)}"
        else:
            detail = f"not factorizable: {v.reason}"
        wit = {"placeholders": {k: str(x) for k, x in v.placeholders.items()}, "reparametrized": v.reparametrized}
        worst = v.consistency.worst if v.consistency else None
        out.append(Record.flag("classification", name, ANCHOR["classify"], ok, detail, wit, worst, self.tol.sym))
        return out

    # global suites ------------------------------------------------------------

    def table_checks(self, registry: Registry, mode: str = "average") -> list[Record]:
        out = []
        for row in DERIVATION_ROWS:
            a, b = registry.get(row.left).operator, registry.get(row.right).operator
            op = semigroup_add(a, b, mode)
            form = bessel_form(op)
            target = registry.get(row.target)
            c = operators_equivalent(op, target.operator, seed=self.seed, tol=self.tol.sym)
            got = f"alpha={form[0]}, beta={form[1]}" if form else "not of Bessel form"
            title = row_for(*form).title if form and row_for(*form) else "unnamed"
            out.append(Record.flag("table-derivation", f"{row.left} + {row.right}", ANCHOR["table"], c.equal,
                                   f"{title} | {row.label} | {got}", c.witness, c.worst, self.tol.sym))
        return out

    def euler_check(self, registry: Registry) -> Record:
        op = semigroup_add(registry.get("regular-bessel").operator, registry.get("modified-bessel").operator)
        cb = compare_on_domain(op.B, parse("1/x"), op.window, 64, op.params, seed=self.seed, tol=self.tol.sym)
        cc = compare_on_domain(op.C, parse("-mu^2/x^2"), op.window, 64, op.params, seed=self.seed, tol=self.tol.sym)
        ok = cb.equal and cc.equal and op.lam == 0
        worst = cb if cb.worst >= cc.worst else cc
        return Record.flag("euler-emergence", "regular-bessel + modified-bessel", ANCHOR["euler"], ok,
                           f"B = {render(op.B)}, C = {render(op.C)}, lam = {op.lam:g}", worst.witness, worst.worst, self.tol.sym)

    def legendre_check(self, registry: Registry) -> Record:
        op = semigroup_add(registry.get("regular-legendre").operator, registry.get("associated-legendre").operator)
        expect = parse("l*(l + 1)/(1 - x^2) - (m^2/2)/(1 - x^2)^2")
        c = compare_on_domain(op.C, expect, (-0.9, 0.9), 64, op.params, seed=self.seed, tol=self.tol.sym)
        return Record.flag("legendre-addition", "regular-legendre + associated-legendre", ANCHOR["legendre"], c.equal,
                           f"C = {render(op.C)}", c.witness, c.worst, self.tol.sym)

    def ladder_checks(self, registry: Registry, lo: float = 1.0, hi: float = 8.0) -> list[Record]:
        o = registry.reference("regular-bessel").operator.eigen_form()
        v = classify_factorization(to_second_canonical(o), seed=self.seed)
        if not v.factorizable:
            return [Record.flag("ladder", "regular-bessel", ANCHOR["ladder"], False, v.reason)]
        lp, out = v.ladder, []
        pad = 0.05
        for mu in (0, 1, 2):
            z = SampledFunction.from_function(lambda x, m=mu: math.sqrt(x) * bessel_j(m, x), lo - pad, hi + pad, 2001)
            for direction, step in (("up", 1), ("down", -1)):
                f = apply_ladder(lp, z, mu, direction)
                s = ratio_spread(f, lambda x, m=mu + step: math.sqrt(x) * bessel_j(m, x), lo, hi)
                out.append(Record.flag(f"ladder-{direction}", f"mu={mu}", ANCHOR["ladder"], s.spread <= self.tol.ladder,
                                       f"ratio to sqrt(x) J_{mu + step} = {s.mean:.12f}", {"x": s.worst_x, "points": s.points},
                                       s.spread, self.tol.ladder))
            for first in ("up", "down"):
                expected = composition_multiple(lp, o.lam, mu, first)
                err, x = multiple_error(compose(lp, z, mu, first), z, expected)
                out.append(Record.flag(f"ladder-compose-{first}", f"mu={mu}", ANCHOR["ladder"], err <= self.tol.ladder,
                                       f"returns {expected:g} z", {"x": x}, err, self.tol.ladder))
        z = SampledFunction.from_function(lambda x: bessel_j(1, x), lo - pad, hi + pad, 2001)
        bare = ratio_spread(apply_ladder(lp, z, 1, "up"), lambda x: bessel_j(2, x), lo, hi)
        out.append(Record.flag("ladder-frame", "mu=1", ANCHOR["ladder"], bare.spread > 1e-3,
                               f"unit ratio holds for sqrt(x) J_mu; bare J_mu ratio spread {bare.spread:.3g}",
                               {"x": bare.worst_x}, bare.spread, 1e-3))
        return out

    def oracle_checks(self) -> list[Record]:
        out = []
        for k, a in (((2.0, 1.0), (0.3, -0.2)), ((1.0, 0.0), (math.pi, 0.0)), ((0.0, 0.0), (1.0, 1.0))):
            rep = plane_wave_irrep_check(k, a)
            out.append(Record.of("plane-wave-translation", f"k={k} a={a}", ANCHOR["plane"], rep.translation))
            out.append(Record.of("plane-wave-gradient", f"k={k}", ANCHOR["plane"], rep.gradient))
        samples = []
        for x in (0.5, 1.0, 2.0, 3.0, 4.0):
            for n in range(9):
                samples.append((abs(jacobi_anger_coefficient(x, n) - bessel_j(n, x)), {"x": x, "n": n}))
        out.append(Record.of("jacobi-anger", "n<=8, x<=4", ANCHOR["jacobi"],
                             CheckResult.collect(1e-8, samples, "trapezoid coefficients against series J_n")))
        z = first_zero(0, 2, 3)
        out.append(Record.flag("jacobi-anger-zero", "x=first zero of J0", ANCHOR["jacobi"],
                               abs(jacobi_anger_coefficient(z, 0)) <= 1e-8, f"x = {z:.15g}",
                               {"x": z}, abs(jacobi_anger_coefficient(z, 0)), 1e-8))
        half = [(abs(bessel_j(0.5, x) - math.sqrt(2 / (math.pi * x)) * math.sin(x)), {"x": x}) for x in (1.0, 2.0, 3.0)]
        out.append(Record.of("bessel-half-order", "mu=1/2", ANCHOR["bessel"],
                             CheckResult.collect(1e-10, half, "J_1/2 = sqrt(2/(pi x)) sin x")))
        res = [(abs(bessel_residual(mu, x)), {"mu": mu, "x": x}) for mu in (0, 0.5, 1, 2) for x in (0.5, 2.0, 5.0, 10.0)]
        out.append(Record.of("bessel-residual", "series J_mu", ANCHOR["bessel"],
                             CheckResult.collect(1e-9, res, "J'' + J'/x + (1 - mu^2/x^2) J")))
        u_path = TestPath.of("sin(x)")
        harmonic = OdeOperator(parse("0"), parse("1"), {}, 0.0, (0.5, 2.5), "witness")
        out.append(Record.of("riccati-witness", "B=0, C=1, u=3 cot x", ANCHOR["riccati"],
                             riccati_solution(harmonic, u_path).check(tol=1e-10)))
        return out

    def global_checks(self, registry: Registry) -> list[Record]:
        return (self.table_checks(registry) + [self.euler_check(registry), self.legendre_check(registry)]
                + self.ladder_checks(registry) + self.oracle_checks())

