from app.core.errors import ShapeMismatch, StepTooLarge
from app.dynamics.schema import StepRecord
from app.linalg.decompositions import spectral_norm
from app.linalg.schema import Matrix
from app.lifted.projections import dilation
from app.lifted.schema import LiftedState, ProblemSpec
from app.lifted.state import split
from app.measurement.operators import measurement_error, normal_map
from app.measurement.schema import MeasOp

GUARD = 2.0 / 3.0


def gd_step_factored(
    U: Matrix, V: Matrix, op: MeasOp, Y: Matrix, eta: float
) -> tuple[Matrix, Matrix]:
    """One gradient step on 1/2 ||A(Y - U V^T)||^2 over the factors."""
    if U.shape[1] != V.shape[1] or Y.shape != (U.shape[0], V.shape[0]):
        raise ShapeMismatch(f"Inconsistent shapes U {U.shape}, V {V.shape}, Y {Y.shape}")
    G = normal_map(op, Y - U @ V.T)
    return U + eta * G @ V, V + eta * G.T @ U


def step_guard(Rtilde: Matrix, eta: float) -> float:
    """eta * ||Rtilde|| in the spectral norm."""
    return eta * spectral_norm(Rtilde)


def gd_step_lifted(
    state: LiftedState, op: MeasOp, spec: ProblemSpec, k: int | None = None
) -> StepRecord:
    """W' = W + eta (R + EA_hat) W, refusing steps outside the 2/3 guard."""
    if k is None:
        k = int(round(state.t / spec.eta))
    W = state.W
    U, V = split(W, spec.m)
    EA_hat = dilation(measurement_error(op, spec.Y, U, V))
    Rtilde = state.R + EA_hat

    guard = step_guard(Rtilde, spec.eta)
    if guard > GUARD:
        raise StepTooLarge(guard).at_step(k)

    return StepRecord(
        k=k,
        eta=spec.eta,
        W_before=W,
        W_after=W + spec.eta * Rtilde @ W,
        R_k=state.R,
        EA_hat_k=EA_hat,
        Rtilde_k=Rtilde,
        guard=guard,
    )
