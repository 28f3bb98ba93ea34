from collections.abc import Callable

import numpy as np
from pydantic import BaseModel, Field

from app.core.errors import FlowSenseError, OperatorKindError
from app.core.services.config import settings
from app.dynamics.derivatives import (central_difference, dF_dt, dWtilde_dt,
                                      richardson_ratio)
from app.dynamics.flow import (flow_derivative_W, flow_interpolate,
                               perturbation_E)
from app.dynamics.schema import StepRecord
from app.experiments.runner import PROBE_STREAM, RIP_STREAM, prepare, trajectory
from app.experiments.schema import ExperimentConfig
from app.linalg.schema import Matrix
from app.lifted.schema import ProblemSpec
from app.lifted.state import derive
from app.measurement.rip import estimate_rip
from app.measurement.schema import OperatorKind, RipEstimate
from app.monitors.bounds import e_bound_report
from app.utils.logger import logger
from app.utils.rng import derive_seed, make_rng

FLOW_PROBE_POINTS = (0.0, 0.25, 0.5, 0.75)


class PerturbationSample(BaseModel):
    s: float
    norm_E: float
    bound: float
    applicable: bool


class FlowProbe(BaseModel):
    k: int
    deviation: float
    deviation_s0: float
    guard: float
    samples: list[PerturbationSample]


class FlowProbeReport(BaseModel):
    steps: int
    probes: list[FlowProbe] = Field(default_factory=list)

    @property
    def max_deviation(self) -> float:
        return max((p.deviation for p in self.probes), default=0.0)

    @property
    def max_deviation_s0(self) -> float:
        return max((p.deviation_s0 for p in self.probes), default=0.0)


class RipCheckReport(BaseModel):
    estimate: RipEstimate
    rho_target: float
    N: int
    passed: bool
    caveat: str = "falsifier-only: a passing estimate does not certify RIP"


class DerivativeCheck(BaseModel):
    k: int
    s: float
    quantity: str
    err_coarse: float
    err_fine: float
    ratio: float
    err_agreement: float
    roundoff_floor: float
    passed: bool
    at_roundoff_floor: bool


class SkippedProbe(BaseModel):
    k: int
    s: float
    reason: str


class DerivativeCheckReport(BaseModel):
    checks: list[DerivativeCheck] = Field(default_factory=list)
    skipped: list[SkippedProbe] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)


def _pick_steps(config: ExperimentConfig, steps: int, probes: int | None) -> list[int]:
    if probes is None or probes >= steps:
        return list(range(steps))
    rng = make_rng(config.seed, PROBE_STREAM)
    return sorted(int(k) for k in rng.choice(steps, size=probes, replace=False))


def _relative(diff: Matrix, reference: Matrix) -> float:
    scale = float(np.linalg.norm(reference))
    err = float(np.linalg.norm(diff))
    return err / scale if scale > 0.0 else err


def probe_flow_step(rec: StepRecord, spec: ProblemSpec) -> FlowProbe:
    samples = []
    for s in FLOW_PROBE_POINTS:
        report = e_bound_report(rec, s, spec)
        item = report.items["perturbation_bound"]
        samples.append(
            PerturbationSample(
                s=s,
                norm_E=float(report.info["norm_E"]),
                bound=item.bound,
                applicable=bool(report.info["applicable"]),
            )
        )
    end = flow_interpolate(rec, 1.0)
    start = flow_interpolate(rec, 0.0)
    return FlowProbe(
        k=rec.k,
        deviation=_relative(end - rec.W_after, rec.W_after),
        deviation_s0=_relative(start - rec.W_before, rec.W_before),
        guard=rec.guard,
        samples=samples,
    )


def flow_vs_gd(config: ExperimentConfig, probes: int | None = None) -> FlowProbeReport:
    """
    Compare the closed-form flow at the end of a step with the gradient
    iterate, on `probes` random steps (every step when None).
    """
    spec, op, W0 = prepare(config)
    steps = config.resolved_steps(spec.T2)
    picks = set(_pick_steps(config, steps, probes))
    report = FlowProbeReport(steps=steps)
    for _, rec in trajectory(spec, op, W0, steps, strict=False):
        if rec.k in picks:
            report.probes.append(probe_flow_step(rec, spec))
    logger.info(
        f"Flow vs GD over {len(report.probes)} steps: "
        f"max deviation {report.max_deviation:.3e}"
    )
    return report


def check_rip(
    config: ExperimentConfig, trials: int, probe_rank: int | None = None
) -> RipCheckReport:
    if config.op_kind != OperatorKind.GAUSSIAN:
        raise OperatorKindError(
            "The identity operator is an exact isometry (rho = 0); "
            "RIP estimation needs op_kind=gaussian"
        )
    spec, op, _ = prepare(config)
    rank = probe_rank or min(spec.r + 1, spec.m, spec.n)
    estimate = estimate_rip(op, rank, trials, derive_seed(config.seed, RIP_STREAM))
    return RipCheckReport(
        estimate=estimate,
        rho_target=spec.rho_target,
        N=op.count,
        passed=estimate.rho_hat <= spec.rho_target,
    )


def roundoff_floor(fn: Callable[[float], Matrix], s: float, eta: float) -> float:
    """
    Error level below which the coarse central difference is dominated by
    evaluation noise, read off a second difference over a tiny step.
    """
    tiny = settings.fd_noise_step_fraction
    noise = float(np.linalg.norm(fn(s + tiny) - 2.0 * fn(s) + fn(s - tiny)))
    coarse = settings.fd_ratio_step_fraction
    scaled = settings.fd_noise_factor * noise / (coarse * eta)
    return max(scaled, settings.fd_roundoff_floor)


def _fd_check(
    fn: Callable[[float], Matrix], analytic: Matrix, s: float, eta: float
) -> tuple[float, float, float, float]:
    def error(step: float) -> float:
        return float(np.linalg.norm(central_difference(fn, s, step, eta) - analytic))

    coarse = settings.fd_ratio_step_fraction
    return (
        error(coarse),
        error(coarse / 2.0),
        error(settings.fd_step_fraction),
        roundoff_floor(fn, s, eta),
    )


def check_derivatives_at(
    rec: StepRecord, s: float, spec: ProblemSpec
) -> list[DerivativeCheck] | SkippedProbe:
    """
    Central differences of W, F and Wtilde along the flow against their
    closed forms. The error must shrink by a factor near 4 when the step is
    halved, unless it already sits at the roundoff floor.
    """

    def state_at(x: float):
        return derive(flow_interpolate(rec, x), spec, rec.time_at(x))

    try:
        state = state_at(s)
        E = perturbation_E(rec, s, spec)
        quantities = {
            "W": (
                lambda x: flow_interpolate(rec, x),
                flow_derivative_W(rec, s, spec),
            ),
            "F": (lambda x: state_at(x).F, dF_dt(state, E)),
            "Wtilde": (lambda x: state_at(x).Wtilde, dWtilde_dt(state, E)),
        }
        errors = {
            name: _fd_check(fn, analytic, s, spec.eta)
            for name, (fn, analytic) in quantities.items()
        }
    except FlowSenseError as e:
        return SkippedProbe(k=rec.k, s=s, reason=e.detail)

    low, high = settings.fd_ratio_window
    checks = []
    for name, (err_coarse, err_fine, err_agreement, floor) in errors.items():
        ratio = richardson_ratio(err_coarse, err_fine)
        at_floor = err_coarse <= floor
        converges = at_floor or low <= ratio <= high
        passed = converges and err_agreement <= settings.fd_agreement_tol
        checks.append(
            DerivativeCheck(
                k=rec.k,
                s=s,
                quantity=name,
                err_coarse=err_coarse,
                err_fine=err_fine,
                ratio=ratio,
                err_agreement=err_agreement,
                roundoff_floor=floor,
                passed=passed,
                at_roundoff_floor=at_floor,
            )
        )
    return checks


def verify_derivatives(config: ExperimentConfig, probes: int) -> DerivativeCheckReport:
    spec, op, W0 = prepare(config)
    steps = config.resolved_steps(spec.T2)
    picks = _pick_steps(config, steps, probes)
    rng = make_rng(config.seed, PROBE_STREAM, 1)
    s_values = rng.uniform(0.2, 0.8, size=len(picks))
    s_by_step = dict(zip(picks, (float(s) for s in s_values)))

    report = DerivativeCheckReport()
    for _, rec in trajectory(spec, op, W0, steps, strict=False):
        if rec.k not in s_by_step:
            continue
        result = check_derivatives_at(rec, s_by_step[rec.k], spec)
        if isinstance(result, SkippedProbe):
            logger.info(f"Probe at k={rec.k} skipped: {result.reason}")
            report.skipped.append(result)
        else:
            report.checks.extend(result)
    if not report.passed:
        logger.warning("Some derivative checks failed, see the report table")
    return report
