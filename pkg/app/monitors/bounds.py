import numpy as np

from app.dynamics.flow import perturbation_E
from app.dynamics.schema import StepRecord
from app.linalg.decompositions import sigma_k, spectral_norm
from app.lifted.schema import LiftedState, ProblemSpec
from app.measurement.rip import ea_bound
from app.monitors.local import mr_infinity
from app.monitors.schema import InvariantReport
from app.utils.logger import logger


def run_beta(spec: ProblemSpec) -> float:
    """Smallest beta whose learning-rate and RIP hypotheses hold for the run's eta and rho."""
    from_eta = 20.0 * spec.eta * spec.normY
    from_rho = 4.0 * np.sqrt(spec.r) * spec.rho_target
    return float(max(from_eta, from_rho))


def assumption_limits(spec: ProblemSpec) -> tuple[float, float]:
    """(rho_max, eta_max) allowed for the end time T = T2."""
    T = spec.T2
    rho_max = spec.delta**2 / (16.0 * np.sqrt(spec.r) * T * spec.normY)
    eta_max = spec.delta**2 / (80.0 * T * spec.normY**2)
    return float(rho_max), float(eta_max)


def e_bound_report(rec: StepRecord, s: float, spec: ProblemSpec) -> InvariantReport:
    """
    Measured ||E_t|| against the perturbation bound, asserted only where the
    bound's own hypotheses hold at W_k.
    """
    t = rec.time_at(s)
    norm_E = spectral_norm(perturbation_E(rec, s, spec))
    norm_EA = spectral_norm(rec.EA_hat_k)
    norm_R_k = spectral_norm(rec.R_k)
    norm_W_k = spectral_norm(rec.W_before)
    sigma_sq = sigma_k(rec.W_before, spec.r + 1) ** 2
    beta = run_beta(spec)

    preconditions = {
        "pre_beta": beta <= 0.25,
        "pre_W_norm": norm_W_k <= 1.5 * spec.sqrt_normY,
        "pre_sigma_r1": sigma_sq <= spec.normY / spec.gamma,
        "pre_eta": spec.eta <= beta / (20.0 * spec.normY) * (1.0 + 1e-12),
        "pre_rho": spec.rho_target <= beta / (4.0 * np.sqrt(spec.r)) * (1.0 + 1e-12),
    }
    preconditions = {name: bool(held) for name, held in preconditions.items()}
    applicable = all(preconditions.values())

    report = InvariantReport(t=t)
    report.info.update(preconditions)
    report.info["applicable"] = applicable
    report.info["beta_run"] = beta
    report.info["beta_20"] = spec.beta_20
    report.info["beta_4"] = spec.beta_4
    report.info["norm_E"] = norm_E
    report.info["norm_EA"] = norm_EA

    bound = beta * (norm_R_k + spec.gamma * sigma_sq)
    if applicable:
        report.add_upper("perturbation_bound", norm_E, bound)
    else:
        report.add_inactive("perturbation_bound", norm_E, bound, "preconditions fail")

    ea_limit = ea_bound(norm_R_k, sigma_sq, spec.r, spec.rho_target, spec.m, spec.n)
    if spec.rho_target > 0.0:
        report.add_upper("measurement_error_bound", norm_EA, ea_limit)
    else:
        note = "no RIP target set"
        report.add_inactive("measurement_error_bound", norm_EA, ea_limit, note)

    rho_max, eta_max = assumption_limits(spec)
    trajectory_bound = spec.delta**2 / spec.T2
    normY_bound = 0.5 * spec.delta**2 * spec.normY
    if applicable and spec.rho_target <= rho_max and spec.eta <= eta_max:
        report.add_upper("trajectory_bound", norm_E, trajectory_bound)
        report.add_upper("trajectory_bound_normY", norm_E, normY_bound)
    else:
        note = "rho and eta outside the end-time assumption"
        report.add_inactive("trajectory_bound", norm_E, trajectory_bound, note)
        report.add_inactive("trajectory_bound_normY", norm_E, normY_bound, note)
    return report


def assumption_report(spec: ProblemSpec, op_N: int) -> InvariantReport:
    rho_max, eta_max = assumption_limits(spec)
    report = InvariantReport(t=spec.T2)
    report.add_upper("rip_rho", spec.rho_target, rho_max)
    report.add_upper("learning_rate", spec.eta, eta_max)

    reference = spec.kappa**4 * np.log(spec.Yrr / spec.epsilon**2) ** 2
    steps_theory = spec.T2 / eta_max
    report.info.update(
        {
            "end_time": spec.T2,
            "measurements": op_N,
            "steps_run": spec.T2 / spec.eta,
            "steps_theory": steps_theory,
            "steps_reference": float(reference),
            "implied_constant": float(steps_theory / reference),
            "exponent": 32.0 * spec.alpha * spec.kappa * spec.delta,
            "beta_20": spec.beta_20,
            "beta_4": spec.beta_4,
        }
    )
    if not report.passed:
        logger.info(
            f"Run parameters are outside the end-time assumption "
            f"(eta_max = {eta_max:.3e}, rho_max = {rho_max:.3e}); monitors still record"
        )
    return report


def final_error_bound(spec: ProblemSpec) -> float:
    exponent = 32.0 * spec.alpha * spec.kappa * spec.delta
    return float(
        64.0
        * spec.epsilon**2
        * (spec.delta**2 * spec.gamma * spec.kappa + np.sqrt(spec.kappa))
        * (spec.Yrr / spec.epsilon**2) ** exponent
    )


def final_error_report(state: LiftedState, spec: ProblemSpec) -> InvariantReport:
    measured = spectral_norm(spec.Y - state.U @ state.V.T)
    exponent = 32.0 * spec.alpha * spec.kappa * spec.delta
    bound = final_error_bound(spec)
    MR_inf = mr_infinity(spec)

    report = InvariantReport(t=state.t)
    report.add_upper("final_error", measured, bound)
    report.add_upper("local_limit", spectral_norm(state.R), MR_inf)
    if spec.delta <= 1.0 / (64.0 * spec.alpha * spec.kappa):
        report.add_upper("exponent", exponent, 0.5)
    else:
        report.add_inactive("exponent", exponent, 0.5, "delta above 1/(64 alpha kappa)")

    report.info.update(
        {
            "final_error": measured,
            "final_error_bound": bound,
            "MR_inf": MR_inf,
            "MR_inf_beta_4": mr_infinity(spec, spec.beta_4),
            # bound scales as epsilon ** epsilon_power
            "epsilon_power": 2.0 * (1.0 - exponent),
        }
    )
    return report

