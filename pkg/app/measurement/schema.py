from enum import Enum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field


class OperatorKind(str, Enum):
    GAUSSIAN = "gaussian"
    IDENTITY = "identity"


class MeasOp(BaseModel):
    m: int = Field(ge=1)
    n: int = Field(ge=1)
    count: int = Field(ge=1)
    kind: OperatorKind
    seed: int = 0
    # (count, m, n) for gaussian, (0, m, n) for identity
    mats: np.ndarray

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    @property
    def is_identity(self) -> bool:
        return self.kind == OperatorKind.IDENTITY


class OperatorHeader(BaseModel):
    """Portable serialization of a MeasOp; gaussian matrices are regenerated from the seed."""

    m: int
    n: int
    N: int
    kind: OperatorKind
    seed: int


class RipEstimate(BaseModel):
    rho_hat: float = Field(ge=0.0)
    trials: int
    probe_rank: int
    seed: int
    falsifier_only: bool = True
