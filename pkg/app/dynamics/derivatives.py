"""
Analytic time derivatives along the perturbed flow dW/dt = (R + E) W.

E is the perturbation at the same time as the state; X + E is the
combination that drives the signal/nuisance quantities.
"""

import math
from collections.abc import Callable

import numpy as np

from app.core.errors import RankDeficient, ZeroMatrix
from app.dynamics.schema import TrackedQuantity
from app.linalg.decompositions import (bottom_singular_pair, check_symmetric,
                                       sigma_k, sym_eig, top_singular_pair)
from app.linalg.schema import Matrix
from app.lifted.schema import LiftedState


def _require_split(state: LiftedState) -> None:
    if state.degenerate:
        raise RankDeficient(sigma_k(state.A, state.spec.r), "A")


def dW_dt(state: LiftedState, E: Matrix) -> Matrix:
    return (state.R + E) @ state.W


def _gram_derivative(state: LiftedState, E: Matrix) -> Matrix:
    """d/dt (W W^T)."""
    Wdot = dW_dt(state, E)
    return Wdot @ state.W.T + state.W @ Wdot.T


def dR_dt(state: LiftedState, E: Matrix) -> Matrix:
    J = state.spec.J
    S = _gram_derivative(state, E)
    return -0.5 * (S - J @ S @ J)


def dX_dt(state: LiftedState, E: Matrix) -> Matrix:
    J = state.spec.J
    return 0.5 * J @ _gram_derivative(state, E) @ J


def imbalance_derivative(state: LiftedState, E: Matrix) -> Matrix:
    """d/dt (W^T J W) = W^T (E^T J + J E) W."""
    J = state.spec.J
    return state.W.T @ (E.T @ J + J @ E) @ state.W


def dF_dt(state: LiftedState, E: Matrix) -> Matrix:
    check_symmetric(E)
    _require_split(state)
    spec = state.spec
    PA, PP, F, Wt = spec.PA, spec.PP, state.F, state.Wtilde
    XE = state.X + E
    G = np.linalg.inv(state.A @ state.A.T)

    aligned = (PP - F @ PA) @ XE @ (PA.T + PP.T @ F)
    nuisance = PP @ Wt @ Wt.T @ (XE @ PA.T @ G - PP.T @ F)
    return aligned + nuisance


def dWtilde_dt(state: LiftedState, E: Matrix) -> Matrix:
    check_symmetric(E)
    _require_split(state)
    spec = state.spec
    PA, PP, F, Wt = spec.PA, spec.PP, state.F, state.Wtilde
    XE = state.X + E

    drift = PP.T @ (PP - F @ PA) @ XE @ Wt
    correction = Wt @ Wt.T @ (XE @ PA.T @ state.Adag.T - 0.5 * state.W + Wt)
    return drift - correction


def dQ_dt(state: LiftedState, E: Matrix) -> Matrix:
    _require_split(state)
    PA = state.spec.PA
    Wdot = dW_dt(state, E)
    half = (np.eye(state.spec.h) - state.Q) @ Wdot.T @ PA.T @ state.Adag.T
    return half + half.T


def tracked_matrix(state: LiftedState, which: TrackedQuantity) -> Matrix:
    spec = state.spec
    match which:
        case TrackedQuantity.W:
            return state.W
        case TrackedQuantity.PAJW:
            return spec.PA @ spec.J @ state.W
        case TrackedQuantity.PNW:
            return spec.PN @ state.W
        case TrackedQuantity.PPX:
            return spec.PP @ state.X @ spec.PP.T
        case TrackedQuantity.A_BOTTOM:
            return state.A
        case TrackedQuantity.R:
            return state.R
        case TrackedQuantity.F:
            _require_split(state)
            return state.F
        case TrackedQuantity.WTILDE:
            _require_split(state)
            return state.Wtilde
        case TrackedQuantity.PNWQ:
            _require_split(state)
            return spec.PN @ state.W @ state.Q


def tracked_derivative(state: LiftedState, E: Matrix, which: TrackedQuantity) -> Matrix:
    spec = state.spec
    match which:
        case TrackedQuantity.W:
            return dW_dt(state, E)
        case TrackedQuantity.PAJW:
            return spec.PA @ spec.J @ dW_dt(state, E)
        case TrackedQuantity.PNW:
            return spec.PN @ dW_dt(state, E)
        case TrackedQuantity.PPX:
            return spec.PP @ dX_dt(state, E) @ spec.PP.T
        case TrackedQuantity.A_BOTTOM:
            return spec.PA @ dW_dt(state, E)
        case TrackedQuantity.R:
            return dR_dt(state, E)
        case TrackedQuantity.F:
            return dF_dt(state, E)
        case TrackedQuantity.WTILDE:
            return dWtilde_dt(state, E)
        case TrackedQuantity.PNWQ:
            _require_split(state)
            return spec.PN @ (dW_dt(state, E) @ state.Q + state.W @ dQ_dt(state, E))


SYMMETRIC_QUANTITIES = {TrackedQuantity.PPX, TrackedQuantity.R}


def singular_pair_derivative(
    state: LiftedState, E: Matrix, which: TrackedQuantity
) -> float:
    """
    u^T (dX/dt) v for the top singular pair of the tracked matrix (the
    bottom pair for A, the top eigenvector for the symmetric R and
    P_P X P_P^T). Invariant under a joint sign flip of u and v.
    """
    M = tracked_matrix(state, which)
    Mdot = tracked_derivative(state, E, which)
    if which in SYMMETRIC_QUANTITIES:
        eig = sym_eig(M)
        if eig.eigenvalues.size == 0 or not np.any(M):
            raise ZeroMatrix(which.value)
        v = eig.eigenvectors[:, 0]
        return float(v @ Mdot @ v)
    if not np.any(M):
        raise ZeroMatrix(which.value)
    if which == TrackedQuantity.A_BOTTOM:
        pair = bottom_singular_pair(M)
    else:
        pair = top_singular_pair(M)
    return float(pair.u @ Mdot @ pair.v)


def central_difference(
    fn: Callable[[float], Matrix], s: float, step: float, eta: float
) -> Matrix:
    """Central difference in t of a function of the in-step parameter s (t = (k + s) eta)."""
    return (fn(s + step) - fn(s - step)) / (2.0 * step * eta)


def richardson_ratio(err_coarse: float, err_fine: float) -> float:
    """Error ratio under step halving; 4 for a second-order scheme."""
    return err_coarse / err_fine if err_fine > 0.0 else math.inf
