from enum import Enum

import numpy as np

from app.core.errors import FlowSenseError
from app.core.services.config import settings
from app.dynamics.derivatives import singular_pair_derivative
from app.dynamics.schema import TrackedQuantity
from app.linalg.schema import Matrix
from app.lifted.schema import LiftedState, ProblemSpec
from app.monitors.local import phase_bounds
from app.monitors.quantities import TrackedNorms, measure
from app.monitors.schema import BoundKind, InvariantReport
from app.monitors.warmup import warmup_bounds
from app.utils.logger import logger


class Phase(str, Enum):
    WARMUP = "warmup"
    LOCAL = "local"


def _near(value: float, boundary: float) -> bool:
    """Within the activation band below an upper boundary."""
    if not np.isfinite(value):
        return False
    return value >= (1.0 - settings.boundary_activation) * boundary


def _warmup_checks(spec: ProblemSpec, norms: TrackedNorms, t: float) -> list[tuple]:
    """(quantity, active, threshold, kind) with the derivative compared against threshold."""
    bounds = warmup_bounds(spec, t)
    growth = 3.0 * spec.alpha * spec.delta_monitor * spec.normY
    rate = 2.0 * spec.Yrr / 5.0
    # nonincreasing while on the boundary
    flat = [
        (TrackedQuantity.W, norms.norm_W, "W_norm"),
        (TrackedQuantity.PAJW, norms.norm_PAJW, "PAJW"),
        (TrackedQuantity.PNW, norms.norm_PNW, "PNW"),
        (TrackedQuantity.PPX, norms.lambda1_PPX, "PPX_lambda1"),
        (TrackedQuantity.F, norms.norm_F, "F_norm"),
    ]
    return [
        (quantity, _near(value, bounds[item]), 0.0, BoundKind.UPPER)
        for quantity, value, item in flat
    ] + [
        (
            TrackedQuantity.WTILDE,
            _near(norms.norm_Wtilde, bounds["Wtilde_norm"]),
            growth * norms.norm_Wtilde,
            BoundKind.UPPER,
        ),
        (
            TrackedQuantity.A_BOTTOM,
            bool(norms.sigma_r_A <= np.sqrt(spec.Yrr)),
            rate * norms.sigma_r_A,
            BoundKind.LOWER,
        ),
    ]


def _local_checks(spec: ProblemSpec, norms: TrackedNorms, t: float) -> list[tuple]:
    MR_t = phase_bounds(spec, t).MR_t
    rate = 2.0 * spec.Yrr / 5.0
    return [
        (
            TrackedQuantity.R,
            _near(norms.norm_R, MR_t),
            -rate * norms.norm_R,
            BoundKind.UPPER,
        ),
        (
            TrackedQuantity.PNWQ,
            _near(norms.norm_PNWQ, 0.4 * MR_t / spec.sqrt_normY),
            -rate * norms.norm_PNWQ,
            BoundKind.UPPER,
        ),
    ]


def derivative_sign_suite(
    state: LiftedState,
    E: Matrix,
    spec: ProblemSpec,
    phase: Phase,
    norms: TrackedNorms | None = None,
) -> InvariantReport:
    """
    Strict derivative inequalities that keep each monitored quantity inside
    its boundary. An inequality is only asserted while its quantity sits
    within the activation band of the boundary (or, for the growth of
    sigma_r(A), while sigma_r(A) is below sqrt(Yrr)).
    """
    norms = norms or measure(state)
    checks = (
        _warmup_checks(spec, norms, state.t)
        if phase == Phase.WARMUP
        else _local_checks(spec, norms, state.t)
    )

    report = InvariantReport(t=state.t)
    report.info["phase"] = phase.value
    for quantity, active, threshold, kind in checks:
        name = f"d_{quantity.value}"
        if not active:
            report.add_inactive(name, 0.0, threshold, "away from boundary", kind)
            continue
        try:
            derivative = singular_pair_derivative(state, E, quantity)
        except FlowSenseError as e:
            logger.debug(f"Derivative of {quantity.value} skipped at t={state.t:.6g}: {e}")
            report.add_inactive(name, 0.0, threshold, f"skipped: {e.detail}", kind)
            continue
        if kind == BoundKind.LOWER:
            report.add_lower(name, derivative, threshold, slack=0.0)
        else:
            report.add_upper(name, derivative, threshold, slack=0.0)
    return report
