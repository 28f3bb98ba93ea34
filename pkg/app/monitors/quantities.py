import math

from pydantic import BaseModel

from app.linalg.decompositions import sigma_k, spectral_norm, top_eigenpair
from app.lifted.schema import LiftedState


class TrackedNorms(BaseModel):
    norm_W: float
    norm_R: float
    norm_imbalance: float
    norm_PAJW: float
    norm_PNW: float
    lambda1_PPX: float
    norm_F: float
    norm_Wtilde: float
    sigma_r_A: float
    sigma_r1_W: float
    norm_PNWQ: float


def measure(state: LiftedState) -> TrackedNorms:
    """Scalars watched by the monitors; split-dependent ones are NaN on a degenerate state."""
    spec = state.spec
    W = state.W
    PPX = spec.PP @ state.X @ spec.PP.T
    lambda1 = top_eigenpair(PPX)[0] if PPX.size else 0.0
    split_norms = (
        (math.nan, math.nan, math.nan)
        if state.degenerate
        else (
            spectral_norm(state.F),
            spectral_norm(state.Wtilde),
            spectral_norm(spec.PN @ W @ state.Q),
        )
    )
    return TrackedNorms(
        norm_W=spectral_norm(W),
        norm_R=spectral_norm(state.R),
        norm_imbalance=spectral_norm(state.imbalance),
        norm_PAJW=spectral_norm(spec.PA @ spec.J @ W),
        norm_PNW=spectral_norm(spec.PN @ W),
        lambda1_PPX=lambda1,
        norm_F=split_norms[0],
        norm_Wtilde=split_norms[1],
        sigma_r_A=sigma_k(state.A, spec.r),
        sigma_r1_W=sigma_k(W, spec.r + 1),
        norm_PNWQ=split_norms[2],
    )
