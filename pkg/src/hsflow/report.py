"""Verification report plumbing shared by the checking modules and the CLI."""

from dataclasses import dataclass
from typing import Optional

PASS = "pass"
FAIL = "fail"
NOT_APPLICABLE = "not-applicable"


@dataclass(frozen=True)
class CheckResult:
    """Outcome of a single named check; every check states its tolerance."""

    check: str
    status: str
    residual: Optional[float] = None
    tolerance: Optional[float] = None
    n: Optional[int] = None
    h: Optional[float] = None

    def to_json_dict(self):
        ok = None if self.status == NOT_APPLICABLE else self.status == PASS
        return {
            "check": self.check,
            "pass": ok,
            "residual": self.residual,
            "tolerance": self.tolerance,
            "n": self.n,
            "h": self.h,
        }


class VerificationReport:
    """Ordered collection of CheckResults with pass/fail aggregation."""

    def __init__(self, results=()):
        self.results = list(results)

    def add(self, check, status, residual=None, tolerance=None, n=None, h=None):
        if status not in (PASS, FAIL, NOT_APPLICABLE):
            raise ValueError(f"unknown status {status!r}")
        if status != NOT_APPLICABLE and tolerance is None:
            raise ValueError(f"check {check!r} must state its tolerance")
        self.results.append(
            CheckResult(
                check=check,
                status=status,
                residual=None if residual is None else float(residual),
                tolerance=None if tolerance is None else float(tolerance),
                n=n,
                h=h,
            )
        )

    def add_bound(self, check, residual, tolerance, n=None, h=None):
        """Pass iff residual <= tolerance."""
        status = PASS if residual <= tolerance else FAIL
        self.add(check, status, residual=residual, tolerance=tolerance, n=n, h=h)

    def extend(self, other):
        self.results.extend(other.results)

    @property
    def passed(self):
        """True if no check failed (not-applicable entries do not count)."""
        return all(r.status != FAIL for r in self.results)

    @property
    def applicable(self):
        return any(r.status != NOT_APPLICABLE for r in self.results)

    def __iter__(self):
        return iter(self.results)

    def __len__(self):
        return len(self.results)

    def to_json_list(self):
        return [r.to_json_dict() for r in self.results]

    def table(self):
        """Fixed-width text table of the report."""
        headers = ("check", "status", "residual", "tolerance", "n", "h")
        rows = [headers]
        for r in self.results:
            rows.append(
                (
                    r.check,
                    r.status,
                    "-" if r.residual is None else f"{r.residual:.6e}",
                    "-" if r.tolerance is None else f"{r.tolerance:.6e}",
                    "-" if r.n is None else str(r.n),
                    "-" if r.h is None else f"{r.h:.6e}",
                )
            )
        widths = [max(len(row[i]) for row in rows) for i in range(len(headers))]
        lines = []
        for k, row in enumerate(rows):
            lines.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)))
            if k == 0:
                lines.append("  ".join("-" * w for w in widths))
        return "\n".join(lines)
