try:
    from typing import Self
except ImportError:  # Python < 3.11
    from typing_extensions import Self


class FlowSenseError(Exception):
    """
    Base error for the numerical library.

    Carries a human readable `detail` and, once it has crossed the run loop,
    the index of the gradient step that raised it.
    """

    def __init__(self, detail: str, step: int | None = None):
        super().__init__(detail)
        self.detail = detail
        self.step = step

    def at_step(self, step: int) -> Self:
        self.step = step
        return self

    def __str__(self) -> str:
        if self.step is None:
            return self.detail
        return f"step {self.step}: {self.detail}"


class NotSymmetric(FlowSenseError):
    def __init__(self, asymmetry: float):
        super().__init__(f"Matrix is not symmetric (relative asymmetry {asymmetry:.3e})")
        self.asymmetry = asymmetry


class RankDeficient(FlowSenseError):
    def __init__(self, sigma: float, what: str = "matrix"):
        super().__init__(f"{what} is rank deficient (sigma_min = {sigma:.3e})")
        self.sigma = sigma


class NonPositiveSpectrum(FlowSenseError):
    def __init__(self, lambda_min: float):
        super().__init__(
            f"Matrix is not positive definite (lambda_min = {lambda_min:.3e})"
        )
        self.lambda_min = lambda_min


class ZeroMatrix(FlowSenseError):
    def __init__(self, what: str = "matrix"):
        super().__init__(f"{what} is identically zero, no singular pair exists")


class ShapeMismatch(FlowSenseError):
    pass


class DimensionError(FlowSenseError):
    pass


class InvalidParameter(FlowSenseError):
    pass


class RankTooHigh(FlowSenseError):
    def __init__(self, sigma_ratio: float, rank: int):
        super().__init__(
            f"Matrix has rank above {rank} (sigma_{rank + 1}/sigma_1 = {sigma_ratio:.3e})"
        )
        self.sigma_ratio = sigma_ratio


class StepTooLarge(FlowSenseError):
    def __init__(self, guard_value: float):
        super().__init__(
            f"eta * ||R + E^A|| = {guard_value:.6f} exceeds the 2/3 guard, "
            "reduce the learning rate"
        )
        self.guard_value = guard_value


class OperatorKindError(FlowSenseError):
    pass
