from enum import Enum

from pydantic import BaseModel, Field

from app.core.services.config import settings


class BoundKind(str, Enum):
    UPPER = "upper"
    LOWER = "lower"
    IDENTITY = "identity"


class ReportItem(BaseModel):
    value: float
    bound: float
    margin: float
    passed: bool
    kind: BoundKind = BoundKind.UPPER
    active: bool = True
    note: str | None = None


class PhaseBounds(BaseModel):
    MR_t: float
    MR_inf: float


class InvariantReport(BaseModel):
    """
    Per-snapshot verdicts. An item passes iff its margin is at least
    -slack * max(1, |bound|); inactive items pass vacuously.
    """

    t: float
    items: dict[str, ReportItem] = Field(default_factory=dict)
    info: dict[str, float | int | str | bool | None] = Field(default_factory=dict)

    @staticmethod
    def _passes(margin: float, bound: float, slack: float) -> bool:
        return margin >= -slack * max(1.0, abs(bound))

    def add_upper(
        self, name: str, value: float, bound: float, slack: float | None = None
    ) -> ReportItem:
        slack = settings.report_slack if slack is None else slack
        margin = float(bound) - float(value)
        item = ReportItem(
            value=float(value),
            bound=float(bound),
            margin=margin,
            passed=self._passes(margin, bound, slack),
        )
        self.items[name] = item
        return item

    def add_lower(
        self, name: str, value: float, bound: float, slack: float | None = None
    ) -> ReportItem:
        slack = settings.report_slack if slack is None else slack
        margin = float(value) - float(bound)
        item = ReportItem(
            value=float(value),
            bound=float(bound),
            margin=margin,
            passed=self._passes(margin, bound, slack),
            kind=BoundKind.LOWER,
        )
        self.items[name] = item
        return item

    def add_identity(
        self, name: str, residual: float, scale: float = 1.0
    ) -> ReportItem:
        """Residual of an algebraic identity against identity_tol * max(1, scale)."""
        bound = settings.identity_tol * max(1.0, float(scale))
        margin = bound - float(residual)
        item = ReportItem(
            value=float(residual),
            bound=bound,
            margin=margin,
            passed=margin >= 0.0,
            kind=BoundKind.IDENTITY,
        )
        self.items[name] = item
        return item

    def add_inactive(
        self,
        name: str,
        value: float,
        bound: float,
        note: str,
        kind: BoundKind = BoundKind.UPPER,
    ) -> ReportItem:
        margin = float(bound) - float(value)
        if kind == BoundKind.LOWER:
            margin = -margin
        item = ReportItem(
            value=float(value),
            bound=float(bound),
            margin=margin,
            passed=True,
            kind=kind,
            active=False,
            note=note,
        )
        self.items[name] = item
        return item

    @property
    def passed(self) -> bool:
        return all(item.passed for item in self.items.values())

    def failures(self) -> list[str]:
        return [name for name, item in self.items.items() if not item.passed]

    def active_items(self) -> list[str]:
        return [name for name, item in self.items.items() if item.active]

    def bitmask(self, names: list[str]) -> int:
        """Bit i set iff names[i] passed (LSB first)."""
        return sum(1 << i for i, name in enumerate(names) if self.items[name].passed)
