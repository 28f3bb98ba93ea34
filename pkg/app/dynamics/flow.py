"""
Closed-form perturbed gradient flow between two gradient steps.

On [k eta, (k+1) eta] the flow dW/dt = (R_t + E_t) W_t with
E_t = ln(I + eta Rtilde_k) / eta - R_t has the exact solution
W(s) = (I + eta Rtilde_k)^s W_k, s = t / eta - k, so nothing is integrated
numerically. At grid points the right limit is used.
"""

from app.core.errors import InvalidParameter
from app.dynamics.schema import StepRecord
from app.linalg.decompositions import spd_frac_power, spd_log
from app.linalg.schema import Matrix
from app.lifted.schema import ProblemSpec
from app.lifted.state import residual_matrix


def _check_s(s: float) -> None:
    if not 0.0 <= s <= 1.0:
        raise InvalidParameter(f"Interpolation parameter s must lie in [0, 1], got {s}")


def flow_interpolate(rec: StepRecord, s: float) -> Matrix:
    _check_s(s)
    return spd_frac_power(rec.growth_matrix(), s) @ rec.W_before


def log_generator(rec: StepRecord) -> Matrix:
    """ln(I + eta Rtilde_k) / eta, constant over the step."""
    return spd_log(rec.growth_matrix()) / rec.eta


def perturbation_E(rec: StepRecord, s: float, spec: ProblemSpec) -> Matrix:
    E = log_generator(rec) - residual_matrix(flow_interpolate(rec, s), spec)
    return 0.5 * (E + E.T)


def flow_derivative_W(rec: StepRecord, s: float, spec: ProblemSpec) -> Matrix:
    """(R_t + E_t) W_t at the interpolated time."""
    W_s = flow_interpolate(rec, s)
    R_s = residual_matrix(W_s, spec)
    E_s = log_generator(rec) - R_s
    return (R_s + E_s) @ W_s
