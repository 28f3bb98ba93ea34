from pathlib import Path

import numpy as np

from app.core.errors import DimensionError, ShapeMismatch
from app.linalg.schema import Matrix, Vector
from app.measurement.schema import MeasOp, OperatorHeader, OperatorKind
from app.utils.logger import logger
from app.utils.rng import make_rng


def gaussian_operator(m: int, n: int, N: int, seed: int) -> MeasOp:
    """
    N measurement matrices with i.i.d. Normal(0, 1/N) entries, so that
    E ||A(X)||^2 = ||X||_F^2.
    """
    if min(m, n, N) < 1:
        raise DimensionError(f"m, n and N must be positive, got ({m}, {n}, {N})")
    rng = make_rng(seed)
    mats = rng.normal(0.0, 1.0 / np.sqrt(N), size=(N, m, n))
    logger.debug(f"Gaussian operator {m}x{n} with N={N} drawn from seed {seed}")
    return MeasOp(m=m, n=n, count=N, kind=OperatorKind.GAUSSIAN, seed=seed, mats=mats)


def identity_operator(m: int, n: int) -> MeasOp:
    if min(m, n) < 1:
        raise DimensionError(f"m and n must be positive, got ({m}, {n})")
    return MeasOp(
        m=m,
        n=n,
        count=m * n,
        kind=OperatorKind.IDENTITY,
        seed=0,
        mats=np.zeros((0, m, n)),
    )


def apply(op: MeasOp, X: Matrix) -> Vector:
    if X.shape != (op.m, op.n):
        raise ShapeMismatch(f"Operator expects {op.m}x{op.n} input, got {X.shape}")
    if op.is_identity:
        return np.array(X, dtype=np.float64).reshape(-1)
    return op.mats.reshape(op.count, -1) @ X.reshape(-1)


def adjoint(op: MeasOp, y: Vector) -> Matrix:
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (op.count,):
        raise ShapeMismatch(f"Adjoint expects a vector of length {op.count}, got {y.shape}")
    if op.is_identity:
        return y.reshape(op.m, op.n).copy()
    return np.tensordot(y, op.mats, axes=1)


def normal_map(op: MeasOp, X: Matrix) -> Matrix:
    """A* A applied to X."""
    if op.is_identity:
        if X.shape != (op.m, op.n):
            raise ShapeMismatch(f"Operator expects {op.m}x{op.n} input, got {X.shape}")
        return np.array(X, dtype=np.float64, copy=True)
    return adjoint(op, apply(op, X))


def measurement_error(op: MeasOp, Y: Matrix, U: Matrix, V: Matrix) -> Matrix:
    """E^A = (A*A - I)(Y - U V^T)."""
    if U.shape[0] != op.m or V.shape[0] != op.n or U.shape[1] != V.shape[1]:
        raise ShapeMismatch(
            f"Factors {U.shape} and {V.shape} do not match a {op.m}x{op.n} operator"
        )
    Z = Y - U @ V.T
    if op.is_identity:
        return np.zeros_like(Z)
    return normal_map(op, Z) - Z


def save_operator(op: MeasOp, path: Path) -> None:
    header = OperatorHeader(m=op.m, n=op.n, N=op.count, kind=op.kind, seed=op.seed)
    path.write_text(header.model_dump_json(indent=2))


def load_operator(path: Path) -> MeasOp:
    header = OperatorHeader.model_validate_json(path.read_text())
    if header.kind == OperatorKind.IDENTITY:
        return identity_operator(header.m, header.n)
    return gaussian_operator(header.m, header.n, header.N, header.seed)
