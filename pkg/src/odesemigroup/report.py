"""Check records and their JSON / CSV / markdown renderings."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Any, Iterable

from . import __version__
from .checks import CheckResult

PLUMBING = "plumbing"
FIELDS = ("check", "subject", "anchor", "status", "worst_residual", "tolerance", "witness", "detail")


def _plain(v: Any) -> Any:
    """JSON-safe copy: numpy scalars to float, fractions to strings, tuples to lists."""
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, bool) or v is None or isinstance(v, str):
        return v
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, int):
        return v
    try:
        f = float(v)
    except (TypeError, ValueError):
        return str(v)
    return f if math.isfinite(f) else str(f)


@dataclass
class Record:
    check: str
    subject: str
    anchor: str
    status: str
    worst_residual: float | None = None
    tolerance: float | None = None
    witness: dict = field(default_factory=dict)
    detail: str = ""

    def __post_init__(self):
        if not self.anchor:
            raise ValueError("every record needs an anchor or 'plumbing'")
        if self.status not in ("pass", "fail"):
            raise ValueError(f"status must be pass or fail, got {self.status!r}")

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    @classmethod
    def of(cls, check: str, subject: str, anchor: str, result: CheckResult, detail: str | None = None) -> "Record":
        return cls(check, subject, anchor, "pass" if result.passed else "fail", _plain(result.worst),
                   _plain(result.tolerance), _plain(result.witness), result.detail if detail is None else detail)

    @classmethod
    def flag(cls, check: str, subject: str, anchor: str, ok: bool, detail: str = "", witness: dict | None = None,
             worst: float | None = None, tolerance: float | None = None) -> "Record":
        return cls(check, subject, anchor, "pass" if ok else "fail", _plain(worst), _plain(tolerance),
                   _plain(witness or {}), detail)

    def to_json(self) -> dict:
        return _plain(asdict(self))


@dataclass
class Table:
    title: str
    headers: list[str]
    rows: list[list[str]]


@dataclass
class Report:
    command: str
    config: dict
    records: list[Record] = field(default_factory=list)
    tables: list[Table] = field(default_factory=list)
    extras: dict = field(default_factory=dict)
    version: str = __version__

    def add(self, rec: Record) -> Record:
        self.records.append(rec)
        return rec

    def extend(self, recs: Iterable[Record]):
        self.records.extend(recs)

    @property
    def failures(self) -> list[Record]:
        return [r for r in self.records if not r.passed]

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_json(self) -> str:
        doc = {
            "version": self.version,
            "command": self.command,
            "config": _plain(self.config),
            "records": [r.to_json() for r in self.records],
            "summary": {"total": len(self.records), "failed": len(self.failures)},
        }
        if self.tables:
            doc["tables"] = [{"title": t.title, "headers": t.headers, "rows": t.rows} for t in self.tables]
        if self.extras:
            doc["extras"] = _plain(self.extras)
        return json.dumps(doc, sort_keys=True, indent=2) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=FIELDS, lineterminator="\n")
        w.writeheader()
        for r in self.records:
            row = r.to_json()
            row["witness"] = json.dumps(row["witness"], sort_keys=True)
            row["worst_residual"] = "" if row["worst_residual"] is None else repr(row["worst_residual"])
            row["tolerance"] = "" if row["tolerance"] is None else repr(row["tolerance"])
            w.writerow(row)
        return buf.getvalue()

    def to_markdown(self) -> str:
        out = [f"# {self.command} (version {self.version})", ""]
        for t in self.tables:
            out += [f"## {t.title}", "", "| " + " | ".join(t.headers) + " |",
                    "|" + "|".join("---" for _ in t.headers) + "|"]
            out += ["| " + " | ".join(row) + " |" for row in t.rows]
            out.append("")
        if self.records:
            out += ["## Checks", "", "| check | subject | status | worst | tolerance | detail |", "|---|---|---|---|---|---|"]
            for r in self.records:
                worst = "" if r.worst_residual is None else f"{r.worst_residual:.3g}" if isinstance(r.worst_residual, float) else str(r.worst_residual)
                tol = "" if r.tolerance is None else f"{r.tolerance:g}"
                detail = r.detail.replace("|", "\\|")
                out.append(f"| {r.check} | {r.subject} | {r.status} | {worst} | {tol} | {detail} |")
            out.append("")
        out.append(f"{len(self.records) - len(self.failures)}/{len(self.records)} checks passed")
        return "\n".join(out) + "\n"

    def render(self, fmt: str) -> str:
        if fmt == "json":
            return self.to_json()
        if fmt == "csv":
            return self.to_csv()
        if fmt == "markdown":
            return self.to_markdown()
        raise ValueError(f"unknown format {fmt!r}")


def records_from_csv(text: str) -> list[Record]:
    out = []
    for row in csv.DictReader(io.StringIO(text)):
        out.append(Record(
            row["check"], row["subject"], row["anchor"], row["status"],
            float(row["worst_residual"]) if row["worst_residual"] else None,
            float(row["tolerance"]) if row["tolerance"] else None,
            json.loads(row["witness"]) if row["witness"] else {},
            row["detail"],
        ))
    return out
