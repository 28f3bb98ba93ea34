import numpy as np

from app.core.errors import DimensionError
from app.linalg.decompositions import orthonormal_complement, svd
from app.linalg.schema import Matrix


def _is_canonical(Y: Matrix) -> bool:
    d = np.diag(Y)
    off = Y.copy()
    np.fill_diagonal(off, 0.0)
    return not np.any(off) and np.all(d >= 0) and np.all(np.diff(d) <= 0)


def canonicalize(Y_raw: Matrix) -> tuple[Matrix, Matrix, Matrix]:
    """
    Rotate Y into diagonal, nonnegative, decreasing form.

    Returns (Y, left_rot, right_rot) with Y_raw = left_rot @ Y @ right_rot.T
    and both rotations orthogonal. An already canonical input keeps identity
    rotations.
    """
    Y_raw = np.asarray(Y_raw, dtype=np.float64)
    m, n = Y_raw.shape
    if _is_canonical(Y_raw):
        return Y_raw.copy(), np.eye(m), np.eye(n)

    res = svd(Y_raw)
    left = np.hstack([res.left, orthonormal_complement(res.left, m)])
    right = np.hstack([res.right, orthonormal_complement(res.right, n)])
    Y = np.zeros((m, n))
    k = res.sigmas.size
    Y[np.arange(k), np.arange(k)] = res.sigmas
    return Y, left, right


def sign_matrix(m: int, n: int) -> Matrix:
    """J = diag(I_m, -I_n)."""
    return np.diag(np.concatenate([np.ones(m), -np.ones(n)]))


def dilation(Y: Matrix) -> Matrix:
    """Self-adjoint dilation [[0, Y], [Y^T, 0]]."""
    m, n = Y.shape
    out = np.zeros((m + n, m + n))
    out[:m, m:] = Y
    out[m:, :m] = Y.T
    return out


def build_projections(m: int, n: int, r: int) -> tuple[Matrix, Matrix, Matrix]:
    """
    P_A picks the aligned part (U_i + V_i)/sqrt(2) of the first r rows,
    P_N the rows of U and V beyond r, and P_P = [P_N; P_A J].
    """
    if not 1 <= r <= min(m, n):
        raise DimensionError(f"Rank r={r} must lie in [1, min(m, n)={min(m, n)}]")
    D = m + n
    idx = np.arange(r)

    PA = np.zeros((r, D))
    PA[idx, idx] = 1.0 / np.sqrt(2.0)
    PA[idx, m + idx] = 1.0 / np.sqrt(2.0)

    nuisance_rows = np.concatenate([np.arange(r, m), np.arange(m + r, D)])
    PN = np.eye(D)[nuisance_rows]

    PP = np.vstack([PN, PA @ sign_matrix(m, n)])
    return PA, PN, PP
