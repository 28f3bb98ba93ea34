import numpy as np

from app.core.services.config import settings
from app.linalg.decompositions import sigma_k, spectral_norm, top_eigenpair
from app.lifted.schema import LiftedState
from app.monitors.schema import InvariantReport


def identity_suite(state: LiftedState) -> InvariantReport:
    """
    Unconditional algebraic identities of the lifted formulation. Every item
    must pass on any state, compliant run or not; residuals are compared
    against identity_tol scaled by the size of the terms involved.
    """
    spec = state.spec
    W, R, X, J = state.W, state.R, state.X, spec.J
    PA, PN, PP = spec.PA, spec.PN, spec.PP
    U, V = state.U, state.V
    normW = spectral_norm(W)
    scale = max(spec.normY, normW**2)

    report = InvariantReport(t=state.t)

    normYhat = spectral_norm(spec.Yhat)
    report.add_identity("dilation_norm", abs(normYhat - spec.normY), spec.normY)
    report.add_identity(
        "dilation_sign", spectral_norm(J @ spec.Yhat @ J + spec.Yhat), spec.normY
    )
    report.add_identity("PN_Yhat", spectral_norm(PN @ spec.Yhat), spec.normY)
    report.add_identity(
        "PA_Yhat_PA",
        spectral_norm(PA @ spec.Yhat @ PA.T - np.diag(np.diag(spec.Y)[: spec.r])),
        spec.normY,
    )

    normR = spectral_norm(R)
    report.add_identity("R_symmetric", spectral_norm(R - R.T), scale)
    report.add_identity("R_sign_flip", spectral_norm(J @ R @ J + R), scale)
    report.add_identity("lambda1_R", abs(top_eigenpair(R)[0] - normR), scale)
    report.add_identity(
        "R_residual", abs(normR - spectral_norm(spec.Y - U @ V.T)), scale
    )
    report.add_upper("R_norm_bound", normR, spec.normY + 0.5 * normW**2)

    report.add_identity(
        "PN_sign_invariance",
        abs(spectral_norm(PN @ J @ X) - spectral_norm(PN @ X)),
        scale,
    )
    report.add_identity(
        "imbalance_blocks",
        spectral_norm(state.imbalance - (U.T @ U - V.T @ V)),
        normW**2,
    )
    # ||v||^2 = ||PA v||^2 + ||PN v||^2 + ||PA J v||^2 summed over the columns of W
    report.add_identity(
        "projection_pythagoras",
        abs(
            np.sum(W**2)
            - np.sum((PA @ W) ** 2)
            - np.sum((PN @ W) ** 2)
            - np.sum((PA @ J @ W) ** 2)
        ),
        np.sum(W**2),
    )

    if state.degenerate:
        report.info["split_identities"] = "skipped: A rank deficient"
        return report

    Q, Wt, F = state.Q, state.Wtilde, state.F
    report.add_identity("Q_idempotent", spectral_norm(Q @ Q - Q), 1.0)
    report.add_identity("Q_symmetric", spectral_norm(Q - Q.T), 1.0)
    report.add_identity("Wtilde_Q", spectral_norm(Wt @ Q), normW)
    report.add_identity("PP_Wtilde", spectral_norm(PP.T @ PP @ Wt - Wt), normW)
    report.add_identity("PA_Wtilde", spectral_norm(PA @ Wt), normW)
    report.add_identity(
        "gram_split", spectral_norm(W @ W.T - W @ Q @ W.T - Wt @ Wt.T), normW**2
    )
    report.add_identity(
        "W_Adag",
        spectral_norm(W @ state.Adag - PA.T - PP.T @ F),
        max(1.0, spectral_norm(F)),
    )
    report.add_upper(
        "sigma_r1_W",
        sigma_k(W, spec.r + 1),
        spectral_norm(Wt),
        slack=settings.identity_tol,
    )
    return report
