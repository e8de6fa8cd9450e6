"""Named equations, registry files and the Bessel/Euler reference tables."""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable

from ..expr import ParamRange, parse
from .operator import OdeOperator, bessel_form, general_bessel, semigroup_add

BESSEL_WINDOW = (0.5, 10.0)
LEGENDRE_WINDOW = (-0.9, 0.9)
FREE_WINDOW = (-10.0, 10.0)

MU_RANGE = ParamRange.interval(0, 4, 1)
L_RANGE = ParamRange.of(1, 2, 3, default=2)
M_RANGE = ParamRange.of(0, 1, 2, default=1)
ALPHA_RANGE = ParamRange.of(Fraction(1), Fraction(3, 2), Fraction(2), default=Fraction(1))
BETA_RANGE = ParamRange.of(-1, 0, 1, default=1)


class UnknownEquationError(KeyError):
    def __str__(self):
        return str(self.args[0])


class RegistryError(ValueError):
    pass


@dataclass(frozen=True)
class BesselRow:
    """One (alpha, beta) row of the Bessel/Euler family."""

    title: str
    name: str
    alpha: Fraction
    beta: Fraction
    novel: bool


BESSEL_ROWS = (
    BesselRow("Regular Bessel", "regular-bessel", Fraction(1), Fraction(1), False),
    BesselRow("Modified Bessel", "modified-bessel", Fraction(1), Fraction(-1), False),
    BesselRow("Spherical Bessel", "spherical-bessel", Fraction(2), Fraction(1), False),
    BesselRow("Modified spherical Bessel", "modified-spherical-bessel", Fraction(2), Fraction(-1), False),
    BesselRow("Semi-spherical Bessel", "semi-spherical-bessel", Fraction(3, 2), Fraction(1), True),
    BesselRow("Modified semi-spherical Bessel", "modified-semi-spherical-bessel", Fraction(3, 2), Fraction(-1), True),
    BesselRow("Regular Euler", "regular-euler", Fraction(1), Fraction(0), False),
    BesselRow("Spherical Euler", "spherical-euler", Fraction(2), Fraction(0), True),
    BesselRow("Semi-spherical Euler", "semi-spherical-euler", Fraction(3, 2), Fraction(0), True),
)


@dataclass(frozen=True)
class DerivationRow:
    """A named equation obtained by averaging two Bessel equations."""

    target: str
    label: str
    left: str
    right: str


DERIVATION_ROWS = (
    DerivationRow("semi-spherical-bessel", "Regular and spherical", "regular-bessel", "spherical-bessel"),
    DerivationRow("modified-semi-spherical-bessel", "Modified and modified spherical", "modified-bessel", "modified-spherical-bessel"),
    DerivationRow("regular-euler", "Regular and modified", "regular-bessel", "modified-bessel"),
    DerivationRow("spherical-euler", "Spherical and modified spherical", "spherical-bessel", "modified-spherical-bessel"),
    DerivationRow("semi-spherical-euler", "Regular and modified spherical", "regular-bessel", "modified-spherical-bessel"),
    DerivationRow("semi-spherical-euler", "Modified and spherical", "modified-bessel", "spherical-bessel"),
)


def row_for(alpha, beta) -> BesselRow | None:
    for row in BESSEL_ROWS:
        if row.alpha == Fraction(alpha) and row.beta == Fraction(beta):
            return row
    return None


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    operator: OdeOperator
    alpha: Fraction | None = None
    beta: Fraction | None = None
    note: str = ""
    builtin: bool = False

    @property
    def title(self) -> str:
        if self.alpha is not None:
            row = row_for(self.alpha, self.beta)
            if row is not None:
                return row.title
        return self.name


def _builtin_entries() -> list[CatalogEntry]:
    out = []
    for row in BESSEL_ROWS:
        op = general_bessel(row.alpha, row.beta, name=row.name, mu_range=MU_RANGE, window=BESSEL_WINDOW)
        out.append(CatalogEntry(row.name, op, row.alpha, row.beta,
                                f"y'' + (alpha/x) y' + (beta - mu^2/x^2) y = 0 with alpha={row.alpha}, beta={row.beta}", True))
    gb = OdeOperator(parse("alpha/x"), parse("beta - mu^2/x^2"),
                     {"alpha": ALPHA_RANGE, "beta": BETA_RANGE, "mu": MU_RANGE}, 0.0, BESSEL_WINDOW,
                     "general-bessel", "mu")
    out.append(CatalogEntry("general-bessel", gb, note="alpha and beta as parameters", builtin=True))
    legendre_b = parse("-2*x/(1 - x^2)")
    out.append(CatalogEntry("regular-legendre", OdeOperator(
        legendre_b, parse("l*(l + 1)/(1 - x^2)"), {"l": L_RANGE}, 0.0, LEGENDRE_WINDOW, "regular-legendre"),
        note="Legendre equation of degree l", builtin=True))
    out.append(CatalogEntry("associated-legendre", OdeOperator(
        legendre_b, parse("l*(l + 1)/(1 - x^2) - m^2/(1 - x^2)^2"), {"l": L_RANGE, "m": M_RANGE}, 0.0,
        LEGENDRE_WINDOW, "associated-legendre", "m"),
        note="associated Legendre equation of degree l and order m", builtin=True))
    out.append(CatalogEntry("identity", OdeOperator(parse("0"), parse("0"), {}, 0.0, FREE_WINDOW, "identity"),
                            note="y'' = 0, solutions a0*x + b0", builtin=True))
    out.append(CatalogEntry("harmonic", OdeOperator(
        parse("0"), parse("omega^2"), {"omega": ParamRange.interval(0.5, 3, 1)}, 0.0, FREE_WINDOW, "harmonic"),
        note="y'' + omega^2 y = 0", builtin=True))
    return out


def _param_spec(name: str, spec) -> ParamRange:
    try:
        return ParamRange.from_json(spec)
    except (KeyError, TypeError) as exc:
        raise RegistryError(f"bad declaration for parameter {name!r}: {spec!r}") from exc


def entry_from_json(item: dict) -> CatalogEntry:
    try:
        name = item["name"]
        B, C = parse(str(item["B"])), parse(str(item["C"]))
    except KeyError as exc:
        raise RegistryError(f"registry entry missing field {exc}") from None
    params = {k: _param_spec(k, v) for k, v in (item.get("params") or {}).items()}
    window = tuple(item.get("window") or FREE_WINDOW)
    if len(window) != 2:
        raise RegistryError(f"entry {name!r}: window must be [lo, hi]")
    index = item.get("index")
    if index is None:
        index = "mu" if "mu" in params else ("m" if "m" in params else None)
    op = OdeOperator(B, C, params, float(item.get("lambda", 0.0)), window, name, index)
    form = bessel_form(op) if "mu" in params and not (set(params) - {"mu"}) else None
    alpha, beta = form if form else (None, None)
    return CatalogEntry(name, op, alpha, beta, str(item.get("note", "")))


def entry_to_json(e: CatalogEntry) -> dict:
    o = e.operator
    out = {"name": e.name, "B": str(o.B), "C": str(o.C),
           "params": {k: v.to_json() for k, v in o.params.items()},
           "lambda": o.lam, "window": list(o.window), "note": e.note}
    if o.index:
        out["index"] = o.index
    return out


class Registry:
    """Name -> entry map seeded with the built-ins; files loaded later win."""

    def __init__(self, entries: Iterable[CatalogEntry] | None = None):
        self._entries: dict[str, CatalogEntry] = {}
        self._reference = {e.name: e for e in _builtin_entries()}
        for e in (self._reference.values() if entries is None else entries):
            self._entries[e.name] = e

    @classmethod
    def with_files(cls, paths: Iterable[str | Path]) -> "Registry":
        reg = cls()
        for p in paths:
            reg.load(p)
        return reg

    def load(self, path: str | Path):
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise RegistryError(f"cannot read registry {path}: {exc}") from exc
        if not isinstance(data, list):
            raise RegistryError(f"registry {path} must hold a JSON array")
        seen = set()
        for item in data:
            e = entry_from_json(item)
            if e.name in seen:
                raise RegistryError(f"duplicate name {e.name!r} in {path}")
            seen.add(e.name)
            self._entries[e.name] = e

    def get(self, name: str) -> CatalogEntry:
        try:
            return self._entries[name]
        except KeyError:
            raise UnknownEquationError(f"unknown equation {name!r}; known: {', '.join(self.names())}") from None

    def reference(self, name: str) -> CatalogEntry | None:
        """The shipped entry for ``name``, unaffected by overrides."""
        return self._reference.get(name)

    def is_overridden(self, name: str) -> bool:
        ref = self._reference.get(name)
        return ref is not None and self._entries.get(name) is not ref

    def names(self) -> list[str]:
        return sorted(self._entries)

    def select(self, patterns: Iterable[str]) -> list[CatalogEntry]:
        """Entries by exact name, by hyphen-separated token, or ``all``."""
        out: dict[str, CatalogEntry] = {}
        for p in patterns:
            if p == "all":
                out.update(self._entries)
            elif p in self._entries:
                out[p] = self._entries[p]
            else:
                hits = {n: e for n, e in self._entries.items() if p in n.split("-")}
                if not hits:
                    self.get(p)
                out.update(hits)
        return [out[n] for n in sorted(out)]

    def __contains__(self, name):
        return name in self._entries

    def __iter__(self):
        return iter(self._entries[n] for n in self.names())


_DEFAULT = Registry()


def catalog_get(name: str, registry: Registry | None = None) -> CatalogEntry:
    return (registry or _DEFAULT).get(name)


def default_registry() -> Registry:
    return Registry()


def bessel_table_operators() -> list[CatalogEntry]:
    return [catalog_get(r.name) for r in BESSEL_ROWS]


def derive_row(row: DerivationRow, mode: str = "average", registry: Registry | None = None):
    """(result operator, recovered (alpha, beta)) for one derivation row."""
    a, b = catalog_get(row.left, registry), catalog_get(row.right, registry)
    op = semigroup_add(a.operator, b.operator, mode)
    return op, bessel_form(op)
