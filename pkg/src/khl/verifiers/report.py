"""The result type shared by every verifier."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

from khl.settings import DEFAULT_TOL

CSV_COLUMNS = ("claim_id", "n", "p", "lhs", "rhs", "margin", "passed")


@dataclass(frozen=True)
class DeficitReport:
    """One checked instance of an inequality ``lhs <= rhs`` (or ``bound <= gap``).

    ``margin`` is the slack; ``passed`` holds when the margin is at least
    ``-tol * max(1, |lhs|, |rhs|)`` and every auxiliary check in ``detail`` held.
    """

    claim_id: str
    n: int | None
    p: float | None
    lhs: float
    rhs: float
    deficit_term: float
    margin: float
    constant_used: float
    passed: bool
    detail: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def csv_row(self) -> tuple:
        return (self.claim_id, self.n, self.p, self.lhs, self.rhs, self.margin, self.passed)


def within(margin: float, lhs: float, rhs: float, tol: float = DEFAULT_TOL) -> bool:
    return margin >= -tol * max(1.0, abs(lhs), abs(rhs))


def make_report(
    claim_id: str,
    *,
    lhs: float,
    rhs: float,
    n: int | None = None,
    p: float | None = None,
    deficit_term: float = 0.0,
    constant_used: float = 0.0,
    margin: float | None = None,
    tol: float = DEFAULT_TOL,
    checks_ok: bool = True,
    detail: dict | None = None,
) -> DeficitReport:
    if margin is None:
        margin = rhs - lhs
    return DeficitReport(
        claim_id=claim_id,
        n=n,
        p=p,
        lhs=lhs,
        rhs=rhs,
        deficit_term=deficit_term,
        margin=margin,
        constant_used=constant_used,
        passed=bool(checks_ok and within(margin, lhs, rhs, tol)),
        detail=detail or {},
    )


def combine_checks(checks: dict[str, tuple[float, float]], tol: float = DEFAULT_TOL) -> tuple[float, bool, dict]:
    """Evaluate several ``lhs <= rhs`` checks; returns (min margin, all passed, per-check detail)."""
    detail = {}
    worst = float("inf")
    ok = True
    for name, (lhs, rhs) in checks.items():
        margin = rhs - lhs
        passed = within(margin, lhs, rhs, tol)
        detail[name] = {"lhs": lhs, "rhs": rhs, "margin": margin, "passed": passed}
        worst = min(worst, margin)
        ok = ok and passed
    return worst, ok, detail
