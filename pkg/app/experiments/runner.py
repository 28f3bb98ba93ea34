import json
import math
import time
from collections.abc import Iterator
from pathlib import Path

import numpy as np
from pydantic import BaseModel, ConfigDict

from app.core.errors import FlowSenseError, ShapeMismatch, StepTooLarge
from app.core.services.config import settings
from app.dynamics.flow import perturbation_E
from app.dynamics.schema import StepRecord
from app.dynamics.steppers import gd_step_lifted
from app.experiments.artifacts import (write_factors, write_snapshot,
                                       write_summary, write_trajectory)
from app.experiments.rows import evaluate_row
from app.experiments.schema import (ExperimentConfig, InitKind,
                                    SummaryReport, TrajectoryLog, Violation)
from app.linalg.schema import Matrix
from app.lifted.init import (calibrate_delta_eff, check_init, init_random,
                             init_scaled_identity, synthesize_target)
from app.lifted.schema import LiftedState, ProblemSpec
from app.lifted.state import derive
from app.measurement.operators import (gaussian_operator, identity_operator,
                                       save_operator)
from app.measurement.rip import estimate_rip
from app.measurement.schema import MeasOp, OperatorKind
from app.monitors.bounds import assumption_report, final_error_report
from app.monitors.derivative_signs import Phase, derivative_sign_suite
from app.monitors.identities import identity_suite
from app.utils.logger import logger
from app.utils.rng import derive_seed

# independent RNG streams per run
INIT_STREAM = 1
RIP_STREAM = 2
PROBE_STREAM = 3

SUMMARY_RIP_TRIALS = 200


class RunResult(BaseModel):
    log: TrajectoryLog
    summary: SummaryReport
    spec: ProblemSpec
    op: MeasOp
    final_W: Matrix

    model_config = ConfigDict(arbitrary_types_allowed=True)


def load_target(config: ExperimentConfig) -> Matrix:
    if config.y_file is None:
        return synthesize_target(
            config.m, config.n, config.r, config.kappa, config.y_rr
        )
    if config.y_file.suffix == ".npy":
        Y = np.load(config.y_file)
    else:
        Y = np.array(json.loads(config.y_file.read_text()), dtype=np.float64)
    if Y.shape != (config.m, config.n):
        raise ShapeMismatch(
            f"Target in {config.y_file} is {Y.shape}, expected {(config.m, config.n)}"
        )
    return np.asarray(Y, dtype=np.float64)


def build_problem(config: ExperimentConfig) -> tuple[ProblemSpec, MeasOp]:
    spec = ProblemSpec.build(
        load_target(config),
        h=config.h,
        r=config.r,
        alpha=config.alpha,
        delta=config.resolved_delta,
        epsilon=config.epsilon,
        eta=config.eta,
        rho_target=config.rho_target,
        delta_eff=config.delta_eff if isinstance(config.delta_eff, float) else None,
    )
    if config.op_kind == OperatorKind.IDENTITY:
        op = identity_operator(config.m, config.n)
    else:
        op = gaussian_operator(config.m, config.n, config.resolved_N, config.seed)
    return spec, op


def initial_weights(config: ExperimentConfig, spec: ProblemSpec) -> Matrix:
    if config.init == InitKind.SCALED_IDENTITY:
        return init_scaled_identity(spec)
    return init_random(spec, config.C, derive_seed(config.seed, INIT_STREAM))


def prepare(config: ExperimentConfig) -> tuple[ProblemSpec, MeasOp, Matrix]:
    spec, op = build_problem(config)
    W0 = initial_weights(config, spec)
    if config.delta_eff == "auto":
        spec = spec.with_delta_eff(calibrate_delta_eff(W0, spec))
    return spec, op, W0


def trajectory(
    spec: ProblemSpec, op: MeasOp, W0: Matrix, steps: int, strict: bool = True
) -> Iterator[tuple[LiftedState, StepRecord]]:
    """Yield (state at k eta, step record k) for k = 0 .. steps - 1."""
    W = W0
    for k in range(steps):
        try:
            state = derive(W, spec, k * spec.eta, strict=strict)
            rec = gd_step_lifted(state, op, spec, k)
        except FlowSenseError as e:
            raise e if e.step is not None else e.at_step(k)
        yield state, rec
        W = rec.W_after


def _final_record(
    state: LiftedState, op: MeasOp, spec: ProblemSpec, k: int
) -> StepRecord | None:
    try:
        return gd_step_lifted(state, op, spec, k)
    except StepTooLarge:
        logger.warning(f"Step guard fails at the final state (k={k}), norm_E not recorded")
        return None


def run(config: ExperimentConfig, out_dir: Path | None = None) -> RunResult:
    """
    Execute the seeded gradient-descent run, monitoring every logged step,
    and write CSV, JSON and snapshot artifacts when out_dir is given.
    """
    started = time.perf_counter()
    spec, op, W0 = prepare(config)
    init_report = check_init(W0, spec)
    assumptions = assumption_report(spec, op.count)
    steps = config.resolved_steps(spec.T2)
    log_every = config.resolved_log_every(steps, settings.default_max_log_rows)
    k_T2 = min(steps, math.ceil(spec.T2 / spec.eta - 1e-9))
    write_snaps = out_dir is not None and (
        settings.write_snapshots if config.snapshots is None else config.snapshots
    )
    logger.info(
        f"Run: {steps} steps, eta={spec.eta}, T1={spec.T1:.4f}, T2={spec.T2:.4f}, "
        f"log every {log_every}"
    )

    log = TrajectoryLog(
        header={
            "config": config.model_dump(mode="json"),
            "code_version": settings.app_version,
        }
    )
    first_warmup: Violation | None = None
    first_local: Violation | None = None
    identity_failures = 0
    sign_failures = 0
    state_T2: LiftedState | None = None

    def record(state: LiftedState, rec: StepRecord | None, k: int) -> None:
        nonlocal first_warmup, first_local, identity_failures, sign_failures
        evaluation = evaluate_row(state, rec, spec, k)
        log.rows.append(evaluation.row)

        warmup_checked = evaluation.row.warmup_pass_bitmask >= 0
        if warmup_checked and first_warmup is None and not evaluation.warmup.passed:
            first_warmup = Violation(t=state.t, item=evaluation.warmup.failures()[0])
            logger.warning(f"First warm-up violation at t={state.t:.4f}: {first_warmup.item}")
        local_checked = evaluation.row.local_pass_bitmask >= 0
        if local_checked and first_local is None and not evaluation.local.passed:
            first_local = Violation(t=state.t, item=evaluation.local.failures()[0])
            logger.warning(f"First local violation at t={state.t:.4f}: {first_local.item}")

        identities = identity_suite(state)
        if not identities.passed:
            identity_failures += 1
            logger.warning(f"Identity failures at t={state.t:.4f}: {identities.failures()}")

        if config.derivative_signs and rec is not None and not state.degenerate:
            E = perturbation_E(rec, 0.0, spec)
            phases = [Phase.WARMUP] if state.t <= spec.T2 else []
            if spec.T1 <= state.t <= spec.T2:
                phases.append(Phase.LOCAL)
            for phase in phases:
                signs = derivative_sign_suite(state, E, spec, phase)
                if not signs.passed:
                    sign_failures += 1
                    logger.debug(
                        f"Derivative sign failures at t={state.t:.4f}: {signs.failures()}"
                    )

        if write_snaps:
            write_snapshot(state.W, state.t, k, out_dir / "snapshots")

    W_last = W0
    for state, rec in trajectory(spec, op, W0, steps):
        k = rec.k
        if k == k_T2:
            state_T2 = state
        if k % log_every == 0:
            record(state, rec, k)
        W_last = rec.W_after

    try:
        final_state = derive(W_last, spec, steps * spec.eta)
    except FlowSenseError as e:
        raise e.at_step(steps)
    record(final_state, _final_record(final_state, op, spec, steps), steps)
    if state_T2 is None:
        state_T2 = final_state

    final = final_error_report(state_T2, spec)
    final_error = float(final.info["final_error"])
    for name in final.failures():
        item = final.items[name]
        logger.warning(
            f"Final check {name} fails at t={state_T2.t:.4f}: "
            f"{item.value:.3e} > {item.bound:.3e}"
        )
    rip = None
    if op.kind == OperatorKind.GAUSSIAN:
        rip = estimate_rip(
            op,
            min(spec.r + 1, spec.m, spec.n),
            SUMMARY_RIP_TRIALS,
            derive_seed(config.seed, RIP_STREAM),
        )

    elapsed = time.perf_counter() - started
    summary = SummaryReport(
        config=config.model_dump(mode="json"),
        code_version=settings.app_version,
        steps=steps,
        T1=spec.T1,
        T2=spec.T2,
        beta_20=spec.beta_20,
        beta_4=spec.beta_4,
        delta_monitor=spec.delta_monitor,
        final_error=final_error,
        thm33_bound=float(final.info["final_error_bound"]),
        final_error_passed=final.items["final_error"].passed,
        norm_R_T2=final.items["local_limit"].value,
        MR_inf=float(final.info["MR_inf"]),
        local_limit_passed=final.items["local_limit"].passed,
        first_warmup_violation=first_warmup,
        first_local_violation=first_local,
        identity_failures=identity_failures,
        derivative_sign_failures=sign_failures,
        init_passed=init_report.passed,
        assumption_passed=assumptions.passed,
        rip_estimate=rip,
        runtime_seconds=elapsed if settings.record_runtime else None,
    )
    logger.info(f"Run finished in {elapsed:.2f}s, final error {final_error:.3e}")

    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        write_trajectory(log, out_dir / "trajectory.csv")
        write_summary(summary, out_dir / "summary.json")
        save_operator(op, out_dir / "operator.json")
        write_factors(spec, final_state.W, out_dir, final_state.t)
        logger.info(f"Artifacts written to {out_dir}")

    return RunResult(log=log, summary=summary, spec=spec, op=op, final_W=final_state.W)
