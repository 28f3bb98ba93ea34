import numpy as np

from app.core.errors import DimensionError, RankTooHigh
from app.linalg.decompositions import singular_values, spectral_norm
from app.linalg.schema import Matrix
from app.measurement.operators import apply, normal_map
from app.measurement.schema import MeasOp, RipEstimate
from app.utils.logger import logger
from app.utils.rng import make_rng

RANK_TOL = 1e-8


def estimate_rip(op: MeasOp, probe_rank: int, trials: int, seed: int) -> RipEstimate:
    """
    Largest observed | ||A(X)||^2 / ||X||_F^2 - 1 | over random rank-`probe_rank`
    probes X = L R^T (Gaussian factors, Frobenius-normalized).

    A lower bound on the true RIP constant, never a certificate.
    """
    if not 1 <= probe_rank <= min(op.m, op.n):
        raise DimensionError(
            f"probe_rank must lie in [1, {min(op.m, op.n)}], got {probe_rank}"
        )
    if trials <= 0:
        logger.warning("estimate_rip called with trials=0, the estimate is vacuous")
        return RipEstimate(rho_hat=0.0, trials=0, probe_rank=probe_rank, seed=seed)

    rng = make_rng(seed)
    rho_hat = 0.0
    for _ in range(trials):
        left = rng.standard_normal((op.m, probe_rank))
        right = rng.standard_normal((op.n, probe_rank))
        X = left @ right.T
        X /= np.linalg.norm(X)
        deviation = abs(float(np.sum(apply(op, X) ** 2)) - 1.0)
        rho_hat = max(rho_hat, deviation)

    logger.debug(f"RIP estimate over {trials} rank-{probe_rank} probes: {rho_hat:.4f}")
    return RipEstimate(rho_hat=rho_hat, trials=trials, probe_rank=probe_rank, seed=seed)


def rip_deviation(op: MeasOp, X: Matrix, r: int) -> float:
    """Operator norm of (A*A)(X) - X for X of rank at most r."""
    sv = singular_values(X)
    if sv.size > r and sv[0] > 0.0 and sv[r] > RANK_TOL * sv[0]:
        raise RankTooHigh(float(sv[r] / sv[0]), r)
    return spectral_norm(normal_map(op, X) - X)


def ea_bound(
    norm_R: float, sigma_r1_W_sq: float, r: int, rho: float, m: int, n: int
) -> float:
    """2 sqrt(r) rho (||R|| + (min(m, n) / (2r) + 1) sigma_{r+1}(W)^2)."""
    nuisance = (min(m, n) / (2.0 * r) + 1.0) * sigma_r1_W_sq
    return float(2.0 * np.sqrt(r) * rho * (norm_R + nuisance))
