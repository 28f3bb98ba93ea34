import numpy as np

from app.core.errors import RankDeficient, ShapeMismatch
from app.linalg.decompositions import pinv_wide, sigma_k
from app.linalg.schema import Matrix
from app.lifted.schema import LiftedState, ProblemSpec
from app.utils.logger import logger

A_RANK_TOL = 1e-12


def lift(U: Matrix, V: Matrix) -> Matrix:
    if U.shape[1] != V.shape[1]:
        raise ShapeMismatch(f"U {U.shape} and V {V.shape} disagree on the inner dimension")
    return np.vstack([U, V])


def split(W: Matrix, m: int) -> tuple[Matrix, Matrix]:
    return W[:m], W[m:]


def residual_matrix(W: Matrix, spec: ProblemSpec) -> Matrix:
    """R = Yhat - (W W^T - J W W^T J) / 2, the dilation of Y - U V^T."""
    JW = spec.J @ W
    R = spec.Yhat - 0.5 * (W @ W.T - JW @ JW.T)
    return 0.5 * (R + R.T)


def derive(
    W: Matrix, spec: ProblemSpec, t: float = 0.0, strict: bool = True
) -> LiftedState:
    """
    Compute every cached field of the lifted state at W.

    With strict=False a rank-deficient aligned block A yields a state without
    the signal/nuisance split instead of raising.
    """
    W = np.asarray(W, dtype=np.float64)
    if W.shape != (spec.D, spec.h):
        raise ShapeMismatch(f"W must be {spec.D}x{spec.h}, got {W.shape}")

    JW = spec.J @ W
    WWt = W @ W.T
    JWWtJ = JW @ JW.T
    R = spec.Yhat - 0.5 * (WWt - JWWtJ)
    R = 0.5 * (R + R.T)
    X = spec.Yhat + 0.5 * JWWtJ
    X = 0.5 * (X + X.T)
    imbalance = W.T @ JW
    A = spec.PA @ W

    fields: dict = {}
    sigma_r_A = sigma_k(A, spec.r)
    try:
        if sigma_r_A < A_RANK_TOL * spec.sqrt_normY:
            raise RankDeficient(sigma_r_A, "A")
        Adag = pinv_wide(A)
    except RankDeficient:
        if strict:
            raise
        logger.debug(f"A is rank deficient at t={t:.6g}, state derived without split")
    else:
        Q = Adag @ A
        Q = 0.5 * (Q + Q.T)
        fields = {
            "Adag": Adag,
            "Q": Q,
            "Wtilde": W - W @ Q,
            "F": spec.PP @ W @ Adag,
        }

    return LiftedState(
        t=t,
        W=W,
        spec=spec,
        A=A,
        R=R,
        X=X,
        imbalance=0.5 * (imbalance + imbalance.T),
        **fields,
    )
