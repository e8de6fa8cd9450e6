"""Outcome of a numeric verification."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class CheckResult:
    """Pass/fail with the worst observed (scaled) violation and where it happened."""

    passed: bool
    worst: float
    tolerance: float
    witness: dict = field(default_factory=dict)
    detail: str = ""

    def __post_init__(self):
        self.passed = bool(self.passed)
        self.worst = float(self.worst)

    def __bool__(self):
        return self.passed

    @classmethod
    def collect(cls, tolerance: float, samples, detail: str = "") -> "CheckResult":
        """Fold (violation, witness) pairs in order; ties keep the first."""
        worst, witness = 0.0, {}
        for v, w in samples:
            if v > worst or (v != v):
                worst, witness = v, w
        return cls(worst <= tolerance, worst, tolerance, witness, detail)
