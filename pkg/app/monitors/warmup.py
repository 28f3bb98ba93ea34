import numpy as np

from app.lifted.schema import LiftedState, ProblemSpec
from app.monitors.quantities import TrackedNorms, measure
from app.monitors.schema import InvariantReport

# bit order of the CSV bitmask, LSB first
WARMUP_ITEMS = [
    "W_norm",
    "imbalance",
    "PAJW",
    "PNW",
    "PPX_lambda1",
    "F_norm",
    "Wtilde_norm",
    "sigma_r_A",
]


def warmup_bounds(spec: ProblemSpec, t: float) -> dict[str, float]:
    delta = spec.delta_monitor
    normY, Yrr, alpha = spec.normY, spec.Yrr, spec.alpha
    return {
        "W_norm": 1.5 * spec.sqrt_normY,
        "imbalance": (1.0 + 5.0 * t / spec.T2) * delta**2 * normY,
        "PAJW": delta / (3.0 * alpha) * spec.sqrt_normY,
        "PNW": delta * np.sqrt(8.0 * normY),
        "PPX_lambda1": 2.0 * delta * normY,
        "F_norm": alpha**2,
        "Wtilde_norm": spec.epsilon * np.exp(3.0 * alpha * delta * normY * t),
        "sigma_r_A": min(
            np.sqrt(Yrr), spec.epsilon / alpha**2 * np.exp(2.0 * Yrr * t / 5.0)
        ),
    }


def warmup_report(
    state: LiftedState, spec: ProblemSpec, norms: TrackedNorms | None = None
) -> InvariantReport:
    t = state.t
    norms = norms or measure(state)
    bounds = warmup_bounds(spec, t)
    values = {
        "W_norm": norms.norm_W,
        "imbalance": norms.norm_imbalance,
        "PAJW": norms.norm_PAJW,
        "PNW": norms.norm_PNW,
        "PPX_lambda1": norms.lambda1_PPX,
        "F_norm": norms.norm_F,
        "Wtilde_norm": norms.norm_Wtilde,
        "sigma_r_A": norms.sigma_r_A,
    }

    report = InvariantReport(t=t)
    for name in WARMUP_ITEMS[:-1]:
        report.add_upper(name, values[name], bounds[name])
    report.add_lower("sigma_r_A", values["sigma_r_A"], bounds["sigma_r_A"])

    report.info["delta_monitor"] = spec.delta_monitor
    report.info["in_phase"] = 0.0 <= t <= spec.T2
    return report


def warmup_bitmask(report: InvariantReport) -> int:
    return report.bitmask(WARMUP_ITEMS)
