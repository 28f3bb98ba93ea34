import numpy as np

from app.linalg.schema import Matrix, Vector
from app.utils.logger import logger


def jacobi_eigh(M: Matrix, tol: float, max_sweeps: int) -> tuple[Vector, Matrix]:
    """
    Cyclic-by-row Jacobi eigenvalue iteration for a symmetric matrix.

    Sweeps over all (p, q) pairs in a fixed order until the off-diagonal
    Frobenius mass drops below tol * ||M||_F. The fixed order makes the
    result reproducible bit for bit on a given platform.

    Returns unsorted eigenvalues and the accumulated rotations (columns are
    eigenvectors).
    """
    A = np.array(M, dtype=np.float64, copy=True)
    n = A.shape[0]
    V = np.eye(n)
    scale = float(np.linalg.norm(A))
    if n < 2 or scale == 0.0:
        return np.diag(A).copy(), V

    threshold = tol * scale
    for sweep in range(max_sweeps):
        off = float(np.sqrt(np.sum(A**2) - np.sum(np.diag(A) ** 2)))
        if off <= threshold:
            logger.debug(f"Jacobi converged after {sweep} sweeps (n={n})")
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                sign = 1.0 if theta >= 0 else -1.0
                t = sign / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c

                col_p = A[:, p].copy()
                col_q = A[:, q].copy()
                A[:, p] = c * col_p - s * col_q
                A[:, q] = s * col_p + c * col_q

                row_p = A[p, :].copy()
                row_q = A[q, :].copy()
                A[p, :] = c * row_p - s * row_q
                A[q, :] = s * row_p + c * row_q
                A[p, q] = A[q, p] = 0.0

                vec_p = V[:, p].copy()
                vec_q = V[:, q].copy()
                V[:, p] = c * vec_p - s * vec_q
                V[:, q] = s * vec_p + c * vec_q
    else:
        logger.warning(
            f"Jacobi iteration hit {max_sweeps} sweeps without reaching tolerance (n={n})"
        )

    return np.diag(A).copy(), V
