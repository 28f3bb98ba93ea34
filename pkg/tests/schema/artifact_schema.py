from pydantic import BaseModel, ConfigDict


class ViolationRead(BaseModel):
    t: float
    item: str


class RipEstimateRead(BaseModel):
    rho_hat: float
    trials: int
    probe_rank: int
    seed: int
    falsifier_only: bool


class SummaryRead(BaseModel):
    model_config = ConfigDict(extra="forbid")

    config: dict
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
    first_warmup_violation: ViolationRead | None
    first_local_violation: ViolationRead | None
    identity_failures: int
    derivative_sign_failures: int
    init_passed: bool
    assumption_passed: bool
    rip_estimate: RipEstimateRead | None
    runtime_seconds: float | None


class SidecarRead(BaseModel):
    t: float
    rows: int
    cols: int
    k: int | None


class OperatorRead(BaseModel):
    m: int
    n: int
    N: int
    kind: str
    seed: int


class SweepEntryRead(BaseModel):
    index: int
    seed: int
    out_dir: str
    summary: SummaryRead | None
    error: str | None


class SweepRead(BaseModel):
    runs: list[SweepEntryRead]
