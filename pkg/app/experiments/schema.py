import math
from enum import Enum
from pathlib import Path
from typing import Any, Literal

from pydantic import BaseModel, Field, field_validator, model_validator

from app.measurement.schema import OperatorKind, RipEstimate


class InitKind(str, Enum):
    RANDOM = "random"
    SCALED_IDENTITY = "scaled_identity"


class ExperimentConfig(BaseModel):
    m: int = Field(default=12, ge=1)
    n: int = Field(default=12, ge=1)
    r: int = Field(default=2, ge=1)
    h: int = Field(default=12, ge=1)
    kappa: float = Field(default=2.0, ge=1.0)
    y_rr: float = Field(default=1.0, gt=0.0)
    y_file: Path | None = None
    op_kind: OperatorKind = OperatorKind.IDENTITY
    N: int | None = Field(default=None, ge=1)
    rho_target: float = Field(default=0.0, ge=0.0)
    eta: float = Field(default=1e-2, gt=0.0)
    epsilon: float = Field(default=1e-3, gt=0.0)
    alpha: float = Field(default=1.0, gt=0.0)
    delta: float | None = Field(default=None, gt=0.0)
    init: InitKind = InitKind.SCALED_IDENTITY
    C: float = Field(default=10.0, gt=0.0)
    steps: int | Literal["auto"] = "auto"
    log_every: int | None = Field(default=None, ge=1)
    seed: int = Field(ge=0, lt=2**64)
    delta_eff: float | Literal["auto"] | None = None
    derivative_signs: bool = True
    snapshots: bool | None = None

    @field_validator("steps")
    @classmethod
    def steps_nonnegative(cls, value: int | str) -> int | str:
        if isinstance(value, int) and value < 0:
            raise ValueError("steps must be nonnegative or 'auto'")
        return value

    @field_validator("delta_eff")
    @classmethod
    def delta_eff_positive(cls, value: float | str | None) -> float | str | None:
        if isinstance(value, float) and value <= 0.0:
            raise ValueError("delta_eff must be positive")
        return value

    @model_validator(mode="after")
    def check_dimensions(self) -> "ExperimentConfig":
        if self.r > min(self.m, self.n):
            raise ValueError(f"r={self.r} exceeds min(m, n)={min(self.m, self.n)}")
        if self.h < self.r:
            raise ValueError(f"h={self.h} must be at least r={self.r}")
        if self.init == InitKind.SCALED_IDENTITY and not self.m == self.n == self.h:
            raise ValueError("scaled_identity init requires m = n = h")
        return self

    @property
    def resolved_delta(self) -> float:
        """Defaults to the largest delta allowed by the initialization assumption."""
        if self.delta is not None:
            return self.delta
        return 1.0 / (64.0 * self.alpha * self.kappa)

    @property
    def resolved_N(self) -> int:
        if self.N is not None:
            return self.N
        if self.op_kind == OperatorKind.IDENTITY:
            return self.m * self.n
        return 6 * (self.m + self.n) * self.r

    def resolved_steps(self, T2: float) -> int:
        if self.steps == "auto":
            return max(0, math.ceil(T2 / self.eta))
        return self.steps

    def resolved_log_every(self, steps: int, max_rows: int = 2000) -> int:
        if self.log_every is not None:
            return self.log_every
        return max(1, steps // max_rows)


class TrajectoryRow(BaseModel):
    """One CSV row; field order is the column order."""

    t: float
    k: int
    norm_W: float
    norm_R: float
    norm_imbalance: float
    norm_PAJW: float
    norm_PNW: float
    lambda1_PPX: float
    norm_F: float
    norm_Wtilde: float
    sigma_r_A: float
    sigma_r1_W: float
    norm_E: float
    MR_t: float
    norm_PNWQ: float
    warmup_pass_bitmask: int
    local_pass_bitmask: int
    ebound_applicable: int
    ebound_pass: int


class Violation(BaseModel):
    t: float
    item: str


class TrajectoryLog(BaseModel):
    header: dict[str, Any]
    rows: list[TrajectoryRow] = Field(default_factory=list)


class SummaryReport(BaseModel):
    config: dict[str, Any]
    code_version: str
    steps: int
    T1: float
    T2: float
    beta_20: float
    beta_4: float
    delta_monitor: float
    final_error: float
    thm33_bound: float
    final_error_passed: bool
    norm_R_T2: float
    MR_inf: float
    local_limit_passed: bool
    first_warmup_violation: Violation | None = None
    first_local_violation: Violation | None = None
    identity_failures: int = 0
    derivative_sign_failures: int = 0
    init_passed: bool
    assumption_passed: bool
    rip_estimate: RipEstimate | None = None
    runtime_seconds: float | None = None
