"""
Dense decompositions for the small matrices of the lifted problem.

Every routine here is a pure function of its inputs. The eigen solver is
selected by `settings.eig_backend`; both backends share the ordering and
sign post-processing so that downstream logs do not depend on the backend
beyond roundoff.
"""

import numpy as np

from app.core.errors import (DimensionError, InvalidParameter,
                             NonPositiveSpectrum, NotSymmetric, RankDeficient,
                             ZeroMatrix)
from app.core.services.config import settings
from app.linalg.jacobi import jacobi_eigh
from app.linalg.schema import Matrix, SingularPair, SVDResult, SymEig, Vector

SYMMETRY_TOL = 1e-12
PINV_RANK_TOL = 1e-10
SPECTRUM_FLOOR = 1e-12


def _fix_signs(vectors: Matrix) -> Vector:
    """Sign per column making its largest-magnitude entry positive (first index wins ties)."""
    if vectors.size == 0:
        return np.ones(vectors.shape[1])
    idx = np.argmax(np.abs(vectors), axis=0)
    picked = vectors[idx, np.arange(vectors.shape[1])]
    return np.where(picked < 0, -1.0, 1.0)


def _raw_eigh(S: Matrix) -> tuple[Vector, Matrix]:
    if settings.eig_backend == "jacobi":
        return jacobi_eigh(S, settings.jacobi_tol, settings.jacobi_max_sweeps)
    return np.linalg.eigh(S)


def check_symmetric(M: Matrix, tol: float = SYMMETRY_TOL) -> None:
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError(f"Expected a square matrix, got shape {M.shape}")
    scale = float(np.linalg.norm(M))
    if scale == 0.0:
        return
    asymmetry = float(np.linalg.norm(M - M.T)) / scale
    if asymmetry > tol:
        raise NotSymmetric(asymmetry)


def sym_eig(M: Matrix) -> SymEig:
    check_symmetric(M)
    S = 0.5 * (M + M.T)
    w, Q = _raw_eigh(S)
    order = np.argsort(-w, kind="stable")
    w = np.asarray(w[order], dtype=np.float64)
    Q = np.asarray(Q[:, order], dtype=np.float64)
    Q = Q * _fix_signs(Q)
    return SymEig(eigenvalues=w, eigenvectors=Q)


def orthonormal_complement(B: Matrix, size: int) -> Matrix:
    """
    Columns completing the orthonormal columns of B (size x k) to a basis of
    R^size, taken as the unit eigenvectors of I - B B^T.
    """
    k = B.shape[1]
    if k >= size:
        return np.zeros((size, 0))
    P = np.eye(size) - B @ B.T
    eig = sym_eig(0.5 * (P + P.T))
    return eig.eigenvectors[:, : size - k]


def _gram_svd(M: Matrix) -> SVDResult:
    # M is rows <= cols; singular vectors of the short side from the Gram matrix
    rows, cols = M.shape
    eig = sym_eig(M @ M.T)
    sigmas = np.sqrt(np.clip(eig.eigenvalues, 0.0, None))
    left = eig.eigenvectors
    right = np.zeros((cols, rows))
    cutoff = PINV_RANK_TOL * sigmas[0] if rows else 0.0
    nonzero = sigmas > max(cutoff, 0.0)
    if np.any(nonzero):
        right[:, nonzero] = (M.T @ left[:, nonzero]) / sigmas[nonzero]
    if not np.all(nonzero):
        right[:, ~nonzero] = orthonormal_complement(right[:, nonzero], cols)[
            :, : int(np.sum(~nonzero))
        ]
        sigmas = np.where(nonzero, sigmas, 0.0)
    return SVDResult(left=left, sigmas=sigmas, right=right)


def svd(M: Matrix) -> SVDResult:
    """
    Thin SVD M = L diag(sigma) R^T with sigma descending and each left
    singular vector signed so that its largest-magnitude entry is positive.
    """
    M = np.asarray(M, dtype=np.float64)
    rows, cols = M.shape
    if settings.eig_backend == "jacobi":
        if rows <= cols:
            res = _gram_svd(M)
            left, sigmas, right = res.left, res.sigmas, res.right
        else:
            res = _gram_svd(M.T)
            left, sigmas, right = res.right, res.sigmas, res.left
    else:
        left, sigmas, right_t = np.linalg.svd(M, full_matrices=False)
        right = right_t.T
        order = np.argsort(-sigmas, kind="stable")
        left, sigmas, right = left[:, order], sigmas[order], right[:, order]

    signs = _fix_signs(left)
    return SVDResult(left=left * signs, sigmas=np.asarray(sigmas), right=right * signs)


def singular_values(M: Matrix) -> Vector:
    M = np.asarray(M, dtype=np.float64)
    if M.size == 0:
        return np.zeros(0)
    if settings.eig_backend == "jacobi":
        G = M @ M.T if M.shape[0] <= M.shape[1] else M.T @ M
        return np.sqrt(np.clip(sym_eig(G).eigenvalues, 0.0, None))
    return np.linalg.svd(M, compute_uv=False)


def spectral_norm(M: Matrix) -> float:
    sv = singular_values(M)
    return float(sv[0]) if sv.size else 0.0


def sigma_k(M: Matrix, k: int) -> float:
    """k-th largest singular value, 1-indexed; zero past the smaller dimension."""
    sv = singular_values(M)
    return float(sv[k - 1]) if 1 <= k <= sv.size else 0.0


def pinv_wide(A: Matrix) -> Matrix:
    """Right pseudoinverse A^T (A A^T)^-1 of a full-row-rank wide matrix."""
    rows, cols = A.shape
    if rows > cols:
        raise DimensionError(f"pinv_wide expects rows <= cols, got {A.shape}")
    sv = singular_values(A)
    if sv.size == 0 or sv[0] == 0.0 or sv[-1] < PINV_RANK_TOL * sv[0]:
        raise RankDeficient(float(sv[-1]) if sv.size else 0.0, "A")
    return np.linalg.solve(A @ A.T, A).T


def _positive_eig(M: Matrix) -> SymEig:
    eig = sym_eig(M)
    lambda_min = float(eig.eigenvalues[-1])
    if lambda_min <= SPECTRUM_FLOOR:
        raise NonPositiveSpectrum(lambda_min)
    return eig


def _spectral_function(eig: SymEig, values: Vector) -> Matrix:
    Q = eig.eigenvectors
    out = (Q * values) @ Q.T
    return 0.5 * (out + out.T)


def spd_log(M: Matrix) -> Matrix:
    eig = _positive_eig(M)
    return _spectral_function(eig, np.log(eig.eigenvalues))


def spd_frac_power(M: Matrix, p: float) -> Matrix:
    if not 0.0 <= p <= 1.0:
        raise InvalidParameter(f"Fractional power must lie in [0, 1], got {p}")
    eig = _positive_eig(M)
    if p == 0.0:
        return np.eye(M.shape[0])
    if p == 1.0:
        return np.array(M, dtype=np.float64, copy=True)
    return _spectral_function(eig, eig.eigenvalues**p)


def spd_exp(S: Matrix) -> Matrix:
    eig = sym_eig(S)
    return _spectral_function(eig, np.exp(eig.eigenvalues))


def top_singular_pair(M: Matrix) -> SingularPair:
    res = svd(M)
    if res.sigmas.size == 0 or res.sigmas[0] == 0.0:
        raise ZeroMatrix()
    return SingularPair(u=res.left[:, 0], v=res.right[:, 0], sigma=float(res.sigmas[0]))


def bottom_singular_pair(M: Matrix) -> SingularPair:
    """Pair of the smallest singular value; M must have full rank min(rows, cols)."""
    res = svd(M)
    if res.sigmas.size == 0 or res.sigmas[0] == 0.0:
        raise ZeroMatrix()
    idx = res.sigmas.size - 1
    if res.sigmas[idx] < PINV_RANK_TOL * res.sigmas[0]:
        raise RankDeficient(float(res.sigmas[idx]))
    return SingularPair(
        u=res.left[:, idx], v=res.right[:, idx], sigma=float(res.sigmas[idx])
    )


def top_eigenpair(S: Matrix) -> tuple[float, Vector]:
    eig = sym_eig(S)
    return float(eig.eigenvalues[0]), eig.eigenvectors[:, 0]
