"""Command-line front end.

Exit status: 0 all checks pass, 1 a check failed, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path

from . import __version__
from .battery import ANCHOR, Battery, Tolerances
from .expr import ParamRange, ParseError, parse, render
from .expr.evaluate import EvaluationError
from .factorization import (
    BesselDomainError,
    QuadratureError,
    bessel_j,
    bessel_residual,
    classify_factorization,
    jacobi_anger_coefficient,
    multiplier_positive,
    potential_check,
    to_second_canonical,
)
from .lagrangian import (
    KINDS,
    NULL_KINDS,
    STANDARD_KINDS,
    VanishingAuxiliaryError,
    auxiliary_solution,
    closure_check,
    el_battery,
    el_on_solution,
    gauge_check,
    gauge_function,
    independent_solution,
    lagrangian,
    nonstandard_lagrangian,
)
from .ode_algebra import (
    BESSEL_ROWS,
    DERIVATION_ROWS,
    CatalogEntry,
    OdeOperator,
    OperatorError,
    Registry,
    RegistryError,
    UnknownEquationError,
    bessel_form,
    entry_to_json,
    integrate_across,
    operators_equivalent,
    row_for,
    semigroup_add,
)
from .report import PLUMBING, Record, Report, Table

DERIVE_KINDS = KINDS + ("gauge",)


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    names: list[str] = field(default_factory=list)
    registry: list[str] = field(default_factory=list)
    kinds: list[str] = field(default_factory=list)
    mode: str = "average"
    tol_el: float = 1e-6
    tol_sym: float = 1e-9
    tol_nsl: float = 1e-5
    seed: int = 0
    format: str = "json"
    output: str | None = None

    def echo(self) -> dict:
        d = asdict(self)
        d.pop("output")
        return d

    def tolerances(self) -> Tolerances:
        return Tolerances(sym=self.tol_sym, el=self.tol_el, nsl=self.tol_nsl)


# ---------------------------------------------------------------------------
# subcommands

def cmd_add(cfg: RunConfig, registry: Registry, name: str | None = None) -> Report:
    if len(cfg.names) < 2:
        raise UsageError("add needs at least two equation names")
    entries = [registry.get(n) for n in cfg.names]
    op = entries[0].operator
    for e in entries[1:]:
        op = semigroup_add(op, e.operator, cfg.mode)
    label = name or "+".join(cfg.names)
    op = OdeOperator(op.B, op.C, op.params, op.lam, op.window, label, op.index)
    rep = Report("add", cfg.echo())
    form = bessel_form(op) if all(e.alpha is not None for e in entries) else None
    if form is not None:
        row = row_for(*form)
        title = row.title if row else "unnamed Bessel-type equation"
        summary = f"{title}, alpha={form[0]}, beta={form[1]}"
    else:
        summary = _match_builtin(op, registry, cfg.seed) or f"B = {render(op.B)}, C = {render(op.C)}"
    detail = f"{summary}; B = {render(op.B)}, C = {render(op.C)}, lam = {op.lam:g}"
    rep.add(Record.flag("semigroup-add", " + ".join(cfg.names), ANCHOR["table"] if form else PLUMBING, True, detail,
                        {"mode": cfg.mode, "window": list(op.window)}))
    entry = CatalogEntry(label, op, form[0] if form else None, form[1] if form else None, summary)
    rep.extras["entry"] = entry_to_json(entry)
    rep.extras["summary"] = summary
    return rep


def _match_builtin(op: OdeOperator, registry: Registry, seed: int) -> str | None:
    for e in registry:
        if set(e.operator.params) != set(op.params):
            continue
        if e.operator.window[0] > op.window[1] or e.operator.window[1] < op.window[0]:
            continue
        if operators_equivalent(op, e.operator, seed=seed).equal:
            return e.name
    return None


def cmd_derive(cfg: RunConfig, registry: Registry) -> Report:
    kinds = cfg.kinds or ["minimal"]
    bad = [k for k in kinds if k not in DERIVE_KINDS]
    if bad:
        raise UsageError(f"unknown kinds {bad}; choose from {', '.join(DERIVE_KINDS)}")
    rep = Report("derive", cfg.echo())
    tol = cfg.tolerances()
    for entry in registry.select(cfg.names):
        o, name = entry.operator, entry.name
        traj = None
        for kind in kinds:
            if kind in STANDARD_KINDS:
                spec = lagrangian(o, kind)
                traj = traj or integrate_across(o, 1.0, 0.0)
                el = el_on_solution(spec, traj, tol=tol.el)
                cl = closure_check(spec, seed=cfg.seed, tol=tol.sym)
                rep.add(Record.of(f"lagrangian-{kind}", name, ANCHOR["el"], el, f"L = {render(spec.body)}"))
                rep.add(Record.of(f"closure-{kind}", name, ANCHOR["closure"], cl))
            elif kind in NULL_KINDS:
                spec = lagrangian(o, kind)
                rep.add(Record.of(f"lagrangian-{kind}", name, ANCHOR["null"], el_battery(spec, tol=tol.null),
                                  f"L = {render(spec.body)}"))
            elif kind == "gauge":
                for nk in NULL_KINDS:
                    spec = lagrangian(o, nk)
                    g = gauge_function(spec)
                    rep.add(Record.of(f"gauge-{nk}", name, ANCHOR["gauge"], gauge_check(g, spec, tol=tol.gauge),
                                      f"Phi = {render(g.phi)}"))
            else:
                try:
                    vbar = auxiliary_solution(o)
                    spec = nonstandard_lagrangian(o, vbar)
                    y = independent_solution(o, vbar)
                    res = el_battery(spec, [y], tol=tol.nsl, params=vbar.params)
                    rep.add(Record.of("lagrangian-nonstandard", name, ANCHOR["nsl"], res,
                                      f"L = {render(spec.body)} on [{vbar.span[0]:.6g}, {vbar.span[1]:.6g}]"))
                except (VanishingAuxiliaryError, ValueError) as exc:
                    rep.add(Record.flag("lagrangian-nonstandard", name, ANCHOR["nsl"], False, str(exc)))
    return rep


def cmd_verify(cfg: RunConfig, registry: Registry) -> Report:
    rep = Report("verify", cfg.echo())
    battery = Battery(cfg.tolerances(), cfg.seed)
    for entry in registry.select(cfg.names or ["all"]):
        rep.extend(battery.operator_checks(entry, registry))
    if not cfg.names or "all" in cfg.names:
        rep.extend(battery.global_checks(registry))
    return rep


def cmd_tables(cfg: RunConfig, registry: Registry) -> Report:
    rep = Report("tables", cfg.echo())
    rows1 = [[("*" if r.novel else "") + r.title, str(r.alpha), str(r.beta), r.name] for r in BESSEL_ROWS]
    rep.tables.append(Table("Bessel and Euler equations y'' + (alpha/x) y' + (beta - mu^2/x^2) y = 0",
                            ["equation", "alpha", "beta", "name"], rows1))
    rows2 = []
    battery = Battery(cfg.tolerances(), cfg.seed)
    for row, rec in zip(DERIVATION_ROWS, battery.table_checks(registry)):
        title, label, got = rec.detail.split(" | ")
        rows2.append([title, label, got, rec.status])
        rep.add(rec)
    rep.tables.append(Table("Equations obtained by averaging", ["equation", "derived from", "result", "check"], rows2))
    for r in BESSEL_ROWS:
        e = registry.get(r.name)
        ok = (e.alpha, e.beta) == (r.alpha, r.beta)
        rep.add(Record.flag("table-row", r.name, ANCHOR["table"], ok,
                            f"{'*' if r.novel else ''}{r.title} | alpha={r.alpha} | beta={r.beta}"))
    return rep


def _param_arg(text: str) -> tuple[str, ParamRange]:
    name, _, spec = text.partition("=")
    if not name or not spec:
        raise UsageError(f"--param expects NAME=VALUE or NAME=LO:HI:DEFAULT, got {text!r}")
    parts = spec.split(":")
    try:
        nums = [Fraction(p) for p in parts]
    except ValueError:
        raise UsageError(f"bad numbers in --param {text!r}") from None
    if len(nums) == 1:
        return name, ParamRange.fixed(nums[0])
    if len(nums) == 3:
        return name, ParamRange.interval(nums[0], nums[1], nums[2])
    raise UsageError(f"--param expects NAME=VALUE or NAME=LO:HI:DEFAULT, got {text!r}")


def cmd_canonicalize(cfg: RunConfig, registry: Registry, args) -> Report:
    rep = Report("canonicalize", cfg.echo())
    if args.B is not None or args.C is not None:
        params = dict(_param_arg(p) for p in args.param or [])
        window = tuple(args.window) if args.window else (0.5, 10.0)
        op = OdeOperator(parse(args.B or "0"), parse(args.C or "0"), params, args.lam, window, "given", args.index)
        targets = [("given", op)]
    else:
        if not cfg.names:
            raise UsageError("canonicalize needs an equation name or --B/--C")
        targets = [(e.name, e.operator) for e in registry.select(cfg.names)]
    for name, op in targets:
        src = op.eigen_form() if args.eigen else op
        cf = to_second_canonical(src)
        rep.add(Record.of("canonical-potential", name, ANCHOR["canonical"],
                          potential_check(cf, seed=cfg.seed, tol=cfg.tol_sym), f"r = {cf.r}"))
        pos = multiplier_positive(cf)
        rep.add(Record.flag("canonical-multiplier", name, ANCHOR["canonical"], pos, f"multiplier = {cf.multiplier}"))
        v = classify_factorization(cf, seed=cfg.seed)
        sound = not v.factorizable or bool(v.consistency)
        if v.factorizable:
            detail = f"factorizable, {v.family}: k = {v.ladder.k}, chi = {v.ladder.chi}, shift = {v.ladder.shift}"
        else:
            detail = f"not factorizable: {v.reason}"
        rep.add(Record.flag("classification", name, ANCHOR["classify"], sound, detail,
                            {k: str(x) for k, x in v.placeholders.items()},
                            v.consistency.worst if v.consistency else None, cfg.tol_sym))
        rep.extras[name] = {
            "r": str(cf.r), "lambda": cf.lam, "multiplier": str(cf.multiplier),
            "factorizable": v.factorizable, "family": v.family, "reason": v.reason,
            "k": str(v.ladder.k) if v.ladder else None, "chi": str(v.ladder.chi) if v.ladder else None,
        }
    return rep


def cmd_bessel(cfg: RunConfig, args) -> Report:
    rep = Report("bessel", cfg.echo())
    for x in args.x:
        if args.jacobi_anger:
            for n in range(args.n_max + 1):
                c = jacobi_anger_coefficient(x, n)
                j = bessel_j(n, x)
                rep.add(Record.flag("jacobi-anger", f"n={n} x={x:g}", ANCHOR["jacobi"], abs(c - j) <= 1e-8,
                                    f"c_n = {c!r}, J_n = {j!r}", {"x": x, "n": n}, abs(c - j), 1e-8))
        else:
            v = bessel_j(args.mu, x)
            res = abs(bessel_residual(args.mu, x))
            rep.add(Record.flag("bessel-j", f"mu={args.mu:g} x={x:g}", ANCHOR["bessel"], res <= 1e-9,
                                f"J = {v!r}", {"mu": args.mu, "x": x}, res, 1e-9))
    return rep


# ---------------------------------------------------------------------------
# argument handling

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--registry", action="append", default=[], metavar="PATH",
                        help="equation registry JSON; repeatable, later files win")
    common.add_argument("--mode", choices=("average", "sum"), default="average", help="addition rule")
    common.add_argument("--tol-el", type=float, default=1e-6, help="Euler-Lagrange residual tolerance on solutions")
    common.add_argument("--tol-sym", type=float, default=1e-9, help="sampled symbolic-equality tolerance")
    common.add_argument("--tol-nsl", type=float, default=1e-5, help="nonstandard Lagrangian residual tolerance")
    common.add_argument("--seed", type=int, default=0, help="seed for sample points")
    common.add_argument("--format", choices=("json", "csv", "markdown"), default="json")
    common.add_argument("--output", "-o", help="write the report here instead of stdout")

    p = argparse.ArgumentParser(prog="odesemigroup", description="Second-order linear ODE algebra, Lagrangians and ladder factorization.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("add", parents=[common], help="combine equations left to right")
    a.add_argument("names", nargs="+")
    a.add_argument("--name", help="name for the resulting entry")

    d = sub.add_parser("derive", parents=[common], help="Lagrangians and gauge functions with their checks")
    d.add_argument("names", nargs="+")
    d.add_argument("--kinds", nargs="+", default=["minimal"], metavar="KIND", help=", ".join(DERIVE_KINDS))

    v = sub.add_parser("verify", parents=[common], help="run the invariant battery")
    v.add_argument("names", nargs="*", default=["all"])

    sub.add_parser("tables", parents=[common], help="Bessel/Euler tables and the averaging derivations")

    c = sub.add_parser("canonicalize", parents=[common], help="second canonical form and factorization verdict")
    c.add_argument("names", nargs="*")
    c.add_argument("--B", help="coefficient of y'")
    c.add_argument("--C", help="coefficient of y")
    c.add_argument("--param", action="append", metavar="NAME=VALUE|NAME=LO:HI:DEFAULT")
    c.add_argument("--index", help="parameter that plays the ladder index")
    c.add_argument("--window", nargs=2, type=float, metavar=("LO", "HI"))
    c.add_argument("--lam", type=float, default=0.0)
    c.add_argument("--eigen", action="store_true", help="move the constant part of C into lambda first")

    b = sub.add_parser("bessel", parents=[common], help="series J_mu(x) or Jacobi-Anger coefficients")
    b.add_argument("--mu", type=float, default=0.0)
    b.add_argument("--x", type=float, nargs="+", default=[1.0])
    b.add_argument("--jacobi-anger", action="store_true")
    b.add_argument("--n-max", type=int, default=8)
    return p


def _config(args) -> RunConfig:
    names = list(getattr(args, "names", []) or [])
    kinds = list(getattr(args, "kinds", []) or [])
    return RunConfig(args.command, names, list(args.registry), kinds, args.mode, args.tol_el, args.tol_sym,
                     args.tol_nsl, args.seed, args.format, args.output)


def run(argv: list[str] | None = None) -> tuple[int, Report | None]:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0), None
    cfg = _config(args)
    try:
        registry = Registry.with_files(cfg.registry)
        if args.command == "add":
            rep = cmd_add(cfg, registry, args.name)
        elif args.command == "derive":
            rep = cmd_derive(cfg, registry)
        elif args.command == "verify":
            rep = cmd_verify(cfg, registry)
        elif args.command == "tables":
            rep = cmd_tables(cfg, registry)
        elif args.command == "canonicalize":
            rep = cmd_canonicalize(cfg, registry, args)
        else:
            rep = cmd_bessel(cfg, args)
        text = rep.render(cfg.format)
        if cfg.output:
            Path(cfg.output).write_text(text)
        else:
            sys.stdout.write(text)
    except (UsageError, UnknownEquationError, RegistryError, ParseError, OperatorError, OSError,
            BesselDomainError, QuadratureError, EvaluationError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"odesemigroup: error: {msg}", file=sys.stderr)
        return 2, None
    return (0 if rep.passed else 1), rep


def main(argv: list[str] | None = None) -> int:
    return run(argv)[0]


if __name__ == "__main__":
    sys.exit(main())
