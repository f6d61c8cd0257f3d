"""Check records and the structured verification report."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from . import __version__

PASS, FAIL, NOT_APPLICABLE = "pass", "fail", "n/a"


@dataclass
class Check:
    name: str
    residual: float
    tolerance: float
    status: str = ""
    detail: dict = field(default_factory=dict)

    def __post_init__(self):
        self.residual = float(self.residual)
        if not self.status:
            ok = math.isfinite(self.residual) and self.residual < self.tolerance
            self.status = PASS if ok else FAIL

    @property
    def passed(self) -> bool:
        return self.status != FAIL

    def to_dict(self):
        return {
            "name": self.name,
            "status": self.status,
            "residual": _clean(self.residual),
            "tolerance": self.tolerance,
            "detail": _clean(self.detail),
        }


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if hasattr(obj, "tolist"):
        return _clean(obj.tolist())
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else repr(obj)
    return obj


@dataclass
class VerificationReport:
    command: str
    config: dict
    conventions: dict
    checks: list = field(default_factory=list)
    tool: str = "sverify"
    version: str = __version__

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def verdict(self) -> str:
        return PASS if self.passed else FAIL

    def extend(self, checks):
        self.checks.extend(checks)

    def to_dict(self):
        return {
            "tool": self.tool,
            "version": self.version,
            "command": self.command,
            "config": _clean(self.config),
            "conventions": _clean(self.conventions),
            "checks": [c.to_dict() for c in self.checks],
            "summary": {
                "total": len(self.checks),
                "failed": sum(not c.passed for c in self.checks),
                "not_applicable": sum(c.status == NOT_APPLICABLE for c in self.checks),
            },
            "verdict": self.verdict,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_text(self) -> str:
        lines = [f"{self.tool} {self.version} :: {self.command}"]
        for key, value in self.conventions.items():
            lines.append(f"  convention {key}: {value}")
        width = max((len(c.name) for c in self.checks), default=10)
        for c in self.checks:
            tag = {PASS: "PASS", FAIL: "FAIL", NOT_APPLICABLE: "N/A "}[c.status]
            lines.append(
                f"  [{tag}] {c.name:<{width}}  residual={c.residual:.3e}  tol={c.tolerance:.1e}"
            )
        failed = sum(not c.passed for c in self.checks)
        lines.append(f"verdict: {self.verdict.upper()} ({len(self.checks) - failed}/{len(self.checks)} ok)")
        return "\n".join(lines) + "\n"
