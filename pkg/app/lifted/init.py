import numpy as np

from app.core.errors import ShapeMismatch
from app.linalg.decompositions import sigma_k, spectral_norm, top_eigenpair
from app.linalg.schema import Matrix
from app.lifted.schema import ProblemSpec
from app.monitors.schema import InvariantReport
from app.utils.logger import logger
from app.utils.rng import make_rng


def synthesize_target(
    m: int, n: int, r: int, kappa: float, y_rr: float = 1.0
) -> Matrix:
    """Diagonal target with r geometrically spaced values from kappa*y_rr down to y_rr."""
    Y = np.zeros((m, n))
    values = np.geomspace(kappa, 1.0, r) * y_rr if r > 1 else np.array([y_rr])
    Y[np.arange(r), np.arange(r)] = values
    return Y


def init_random(spec: ProblemSpec, scale_C: float, seed: int) -> Matrix:
    std = spec.epsilon / (scale_C * np.sqrt(spec.h))
    return make_rng(seed).normal(0.0, std, size=(spec.D, spec.h))


def init_scaled_identity(spec: ProblemSpec) -> Matrix:
    """U0 = V0 = (eps / sqrt(2)) I, which needs m = n = h."""
    if not spec.m == spec.n == spec.h:
        raise ShapeMismatch(
            f"Scaled identity init needs m = n = h, got ({spec.m}, {spec.n}, {spec.h})"
        )
    block = spec.epsilon / np.sqrt(2.0) * np.eye(spec.h)
    return np.vstack([block, block])


def check_init(W0: Matrix, spec: ProblemSpec) -> InvariantReport:
    """Initialization and hyperparameter conditions needed by the convergence guarantee."""
    report = InvariantReport(t=0.0)
    cap = min(
        np.sqrt(spec.kappa) / (spec.alpha * spec.gamma), spec.delta / (3.0 * spec.alpha)
    )
    report.add_upper("init_norm", spectral_norm(W0), spec.epsilon)
    report.add_lower(
        "init_sigma_r_A", sigma_k(spec.PA @ W0, spec.r), spec.epsilon / spec.alpha**2
    )
    report.add_upper("epsilon_cap", spec.epsilon, float(cap * spec.sqrt_normY))
    report.add_upper("delta_cap", spec.delta, 1.0 / (64.0 * spec.alpha * spec.kappa))
    report.add_lower("alpha_min", spec.alpha, 1.0)
    if not report.passed:
        logger.warning(f"Initialization conditions fail: {', '.join(report.failures())}")
    return report


def calibrate_delta_eff(W0: Matrix, spec: ProblemSpec) -> float:
    """
    Smallest delta for which the delta-dependent warm-up bounds (imbalance,
    P_A J W, P_N W and the P_P X P_P^T eigenvalue) all hold at W0.
    """
    JW = spec.J @ W0
    X = spec.Yhat + 0.5 * JW @ JW.T
    lambda1, _ = top_eigenpair(spec.PP @ X @ spec.PP.T)
    candidates = {
        "imbalance": np.sqrt(spectral_norm(W0.T @ JW) / spec.normY),
        "PAJW": 3.0 * spec.alpha * spectral_norm(spec.PA @ JW) / spec.sqrt_normY,
        "PNW": spectral_norm(spec.PN @ W0) / np.sqrt(8.0 * spec.normY),
        "PPX": max(lambda1, 0.0) / (2.0 * spec.normY),
    }
    binding = max(candidates, key=candidates.get)
    delta_eff = float(candidates[binding])
    logger.info(f"Calibrated delta_eff = {delta_eff:.6g} (binding item: {binding})")
    return delta_eff
