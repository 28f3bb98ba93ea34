import numpy as np

from app.lifted.schema import LiftedState, ProblemSpec
from app.monitors.quantities import TrackedNorms, measure
from app.monitors.schema import InvariantReport, PhaseBounds

LOCAL_ITEMS = ["R_norm", "PNWQ_norm"]


def mr_infinity(spec: ProblemSpec, beta: float | None = None) -> float:
    beta = spec.beta_20 if beta is None else beta
    normY, Yrr = spec.normY, spec.Yrr
    return float(
        64.0
        * (beta * spec.gamma * normY / Yrr + np.sqrt(normY / Yrr))
        * spec.epsilon**2
        * np.exp(6.0 * spec.alpha * spec.delta_monitor * normY * spec.T2)
    )


def phase_bounds(spec: ProblemSpec, t: float) -> PhaseBounds:
    """M^R_t = max(3 ||Y|| exp(-(2 Yrr / 5)(t - T1)), M^R_inf), nonincreasing in t."""
    MR_inf = mr_infinity(spec)
    decay = 3.0 * spec.normY * np.exp(-(2.0 * spec.Yrr / 5.0) * (t - spec.T1))
    return PhaseBounds(MR_t=float(max(decay, MR_inf)), MR_inf=MR_inf)


def local_report(
    state: LiftedState,
    spec: ProblemSpec,
    t: float | None = None,
    norms: TrackedNorms | None = None,
) -> InvariantReport:
    t = state.t if t is None else t
    norms = norms or measure(state)
    bounds = phase_bounds(spec, t)

    report = InvariantReport(t=t)
    report.add_upper("R_norm", norms.norm_R, bounds.MR_t)
    report.add_upper("PNWQ_norm", norms.norm_PNWQ, 0.4 * bounds.MR_t / spec.sqrt_normY)
    report.info["MR_t"] = bounds.MR_t
    report.info["MR_inf"] = bounds.MR_inf
    report.info["MR_inf_beta_4"] = mr_infinity(spec, spec.beta_4)
    report.info["in_phase"] = spec.T1 <= t <= spec.T2
    return report


def local_bitmask(report: InvariantReport) -> int:
    return report.bitmask(LOCAL_ITEMS)
