import numpy as np
from pydantic import BaseModel, ConfigDict

# float64 arrays; pydantic only checks the instance type
Matrix = np.ndarray
Vector = np.ndarray


class SymEig(BaseModel):
    eigenvalues: Vector  # descending
    eigenvectors: Matrix  # orthonormal columns

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    def reconstruct(self) -> Matrix:
        Q = self.eigenvectors
        return (Q * self.eigenvalues) @ Q.T


class SingularPair(BaseModel):
    u: Vector
    v: Vector
    sigma: float

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)


class SVDResult(BaseModel):
    left: Matrix
    sigmas: Vector  # descending, nonnegative
    right: Matrix

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    def reconstruct(self) -> Matrix:
        return (self.left * self.sigmas) @ self.right.T
