from typing import Literal

from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    # App Settings
    app_name: str = "Perturbed-Flow-Sensing"
    app_description: str = (
        "Factorized gradient descent for asymmetric matrix sensing, "
        "its perturbed gradient flow and trajectory monitors"
    )
    app_version: str = "0.1.0"

    # Logging
    log_level: str = "INFO"

    # Linear algebra
    eig_backend: Literal["lapack", "jacobi"] = "lapack"
    jacobi_tol: float = 1e-14
    jacobi_max_sweeps: int = 100

    # Monitor tolerances
    report_slack: float = 1e-9
    identity_tol: float = 1e-10
    boundary_activation: float = 0.01

    # Finite differences, step sizes as fractions of eta
    fd_step_fraction: float = 1e-4
    fd_ratio_step_fraction: float = 0.05
    fd_agreement_tol: float = 1e-6
    fd_ratio_window: tuple[float, float] = (3.5, 4.5)
    fd_noise_step_fraction: float = 1e-8
    fd_noise_factor: float = 300.0
    fd_roundoff_floor: float = 1e-14

    # Artifacts
    record_runtime: bool = False
    write_snapshots: bool = True
    default_max_log_rows: int = 2000

    model_config = {"env_file": ".env", "case_sensitive": False, "extra": "ignore"}


# Create settings instance
settings = Settings()
