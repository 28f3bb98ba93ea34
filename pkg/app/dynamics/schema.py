from enum import Enum

import numpy as np
from pydantic import BaseModel, ConfigDict

from app.linalg.schema import Matrix


class StepRecord(BaseModel):
    """
    One gradient step in lifted form: W_after = (I + eta * Rtilde_k) W_before,
    with Rtilde_k = R_k + EA_hat_k and eta * ||Rtilde_k|| <= 2/3.
    """

    k: int
    eta: float
    W_before: Matrix
    W_after: Matrix
    R_k: Matrix
    EA_hat_k: Matrix
    Rtilde_k: Matrix
    guard: float

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    def time_at(self, s: float) -> float:
        return (self.k + s) * self.eta

    def growth_matrix(self) -> Matrix:
        """I + eta * Rtilde_k."""
        M = np.eye(self.Rtilde_k.shape[0]) + self.eta * self.Rtilde_k
        return 0.5 * (M + M.T)


class TrackedQuantity(str, Enum):
    W = "W"
    PAJW = "PAJW"
    PNW = "PNW"
    PPX = "PPX"
    F = "F"
    WTILDE = "Wtilde"
    A_BOTTOM = "A_bottom"
    R = "R"
    PNWQ = "PNWQ"
