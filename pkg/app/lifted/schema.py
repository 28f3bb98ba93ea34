import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from app.core.errors import DimensionError, RankDeficient, RankTooHigh
from app.linalg.decompositions import singular_values
from app.linalg.schema import Matrix

TARGET_RANK_TOL = 1e-12


class ProblemSpec(BaseModel):
    """
    Target, dimensions and hyperparameters of one sensing problem, in the
    canonical frame where Y is diagonal, nonnegative and decreasing.

    The lifted constants (Yhat, J, projections) are built once here and
    shared by every state that references the spec.
    """

    m: int
    n: int
    r: int
    h: int
    Y: Matrix
    normY: float
    Yrr: float
    kappa: float
    gamma: float
    alpha: float
    delta: float
    epsilon: float
    eta: float
    rho_target: float = 0.0
    T1: float
    T2: float
    beta_20: float
    beta_4: float
    delta_eff: float | None = None

    Yhat: Matrix
    J: Matrix
    PA: Matrix
    PN: Matrix
    PP: Matrix
    # Y_raw = left_rot @ Y @ right_rot.T
    left_rot: Matrix
    right_rot: Matrix

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    @property
    def D(self) -> int:
        return self.m + self.n

    @property
    def beta(self) -> float:
        return self.beta_20

    @property
    def delta_monitor(self) -> float:
        """Delta used by the trajectory monitors; the initialization checks keep `delta`."""
        return self.delta if self.delta_eff is None else self.delta_eff

    @property
    def sqrt_normY(self) -> float:
        return float(np.sqrt(self.normY))

    def with_delta_eff(self, delta_eff: float | None) -> "ProblemSpec":
        return self.model_copy(update={"delta_eff": delta_eff})

    def to_original_frame(self, U: Matrix, V: Matrix) -> tuple[Matrix, Matrix]:
        return self.left_rot @ U, self.right_rot @ V

    @classmethod
    def build(
        cls,
        Y_raw: Matrix,
        h: int,
        r: int,
        alpha: float,
        delta: float,
        epsilon: float,
        eta: float,
        rho_target: float = 0.0,
        delta_eff: float | None = None,
    ) -> "ProblemSpec":
        from app.lifted.projections import (build_projections, canonicalize,
                                            dilation, sign_matrix)

        Y_raw = np.asarray(Y_raw, dtype=np.float64)
        m, n = Y_raw.shape
        if not 1 <= r <= min(m, n):
            raise DimensionError(f"Rank r={r} must lie in [1, min(m, n)={min(m, n)}]")
        if h < r:
            raise DimensionError(f"Inner dimension h={h} must be at least r={r}")

        Y, left_rot, right_rot = canonicalize(Y_raw)
        sv = np.diag(Y)
        normY = float(sv[0])
        Yrr = float(sv[r - 1])
        if Yrr <= 0.0:
            raise RankDeficient(Yrr, "target Y")
        tail = singular_values(Y)[r:] if r < min(m, n) else np.zeros(0)
        if tail.size and tail[0] > TARGET_RANK_TOL * normY:
            raise RankTooHigh(float(tail[0] / normY), r)

        T1 = 5.0 / (4.0 * Yrr) * np.log(alpha**4 * Yrr / epsilon**2)
        T2 = 5.0 / Yrr * np.log(Yrr / epsilon**2)
        PA, PN, PP = build_projections(m, n, r)

        return cls(
            m=m,
            n=n,
            r=r,
            h=h,
            Y=Y,
            normY=normY,
            Yrr=Yrr,
            kappa=normY / Yrr,
            gamma=min(m, n) / r,
            alpha=alpha,
            delta=delta,
            epsilon=epsilon,
            eta=eta,
            rho_target=rho_target,
            T1=float(T1),
            T2=float(T2),
            beta_20=delta**2 / (20.0 * T2 * normY),
            beta_4=delta**2 / (4.0 * T2 * normY),
            delta_eff=delta_eff,
            Yhat=dilation(Y),
            J=sign_matrix(m, n),
            PA=PA,
            PN=PN,
            PP=PP,
            left_rot=left_rot,
            right_rot=right_rot,
        )


class LiftedState(BaseModel):
    """
    Snapshot of W = [U; V] at time t with its derived decomposition.

    The signal/nuisance fields (Adag, Q, Wtilde, F) are None when the state
    was derived leniently and A = P_A W has lost rank.
    """

    t: float
    W: Matrix
    spec: ProblemSpec = Field(repr=False)
    A: Matrix
    Adag: Matrix | None = None
    Q: Matrix | None = None
    Wtilde: Matrix | None = None
    F: Matrix | None = None
    R: Matrix
    X: Matrix
    imbalance: Matrix

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    @property
    def U(self) -> Matrix:
        return self.W[: self.spec.m]

    @property
    def V(self) -> Matrix:
        return self.W[self.spec.m :]

    @property
    def degenerate(self) -> bool:
        return self.Adag is None
