import math

from pydantic import BaseModel

from app.dynamics.schema import StepRecord
from app.experiments.schema import TrajectoryRow
from app.lifted.schema import LiftedState, ProblemSpec
from app.monitors.bounds import e_bound_report
from app.monitors.local import local_bitmask, local_report, phase_bounds
from app.monitors.quantities import measure
from app.monitors.schema import InvariantReport
from app.monitors.warmup import warmup_bitmask, warmup_report


class RowEvaluation(BaseModel):
    row: TrajectoryRow
    warmup: InvariantReport
    local: InvariantReport
    ebound: InvariantReport | None = None


def evaluate_row(
    state: LiftedState, rec: StepRecord | None, spec: ProblemSpec, k: int
) -> RowEvaluation:
    """
    Every W-derived CSV column of one logged step. Bitmasks are -1 outside
    their phase; norm_E is the right limit at the grid point.
    """
    t = state.t
    norms = measure(state)
    warm = warmup_report(state, spec, norms)
    local = local_report(state, spec, norms=norms)
    ebound = e_bound_report(rec, 0.0, spec) if rec is not None else None

    in_warmup = 0.0 <= t <= spec.T2
    in_local = spec.T1 <= t <= spec.T2
    row = TrajectoryRow(
        t=t,
        k=k,
        **norms.model_dump(),
        norm_E=float(ebound.info["norm_E"]) if ebound else math.nan,
        MR_t=phase_bounds(spec, t).MR_t,
        warmup_pass_bitmask=warmup_bitmask(warm) if in_warmup else -1,
        local_pass_bitmask=local_bitmask(local) if in_local else -1,
        ebound_applicable=int(bool(ebound and ebound.info["applicable"])),
        ebound_pass=int(ebound.passed) if ebound else 0,
    )
    return RowEvaluation(row=row, warmup=warm, local=local, ebound=ebound)
