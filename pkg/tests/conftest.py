import numpy as np
import pytest

from app.core.services.config import settings
from app.experiments.runner import run
from app.experiments.schema import ExperimentConfig
from app.lifted.init import init_scaled_identity, synthesize_target
from app.lifted.schema import ProblemSpec
from app.measurement.operators import gaussian_operator, identity_operator
from app.utils.rng import make_rng

# m = n = h = 12, r = 2, kappa = 2, scaled identity init
REFERENCE = {"seed": 0, "delta_eff": "auto", "snapshots": False}


@pytest.fixture
def rng() -> np.random.Generator:
    return make_rng(20240611)


@pytest.fixture(params=["lapack", "jacobi"])
def eig_backend(request, monkeypatch):
    """Run a test once per eigen backend."""
    monkeypatch.setattr(settings, "eig_backend", request.param)
    return request.param


@pytest.fixture
def reference_spec() -> ProblemSpec:
    return ProblemSpec.build(
        synthesize_target(12, 12, 2, 2.0),
        h=12,
        r=2,
        alpha=1.0,
        delta=1.0 / 128.0,
        epsilon=1e-3,
        eta=1e-2,
    )


@pytest.fixture
def reference_W0(reference_spec):
    return init_scaled_identity(reference_spec)


@pytest.fixture
def small_spec() -> ProblemSpec:
    """Rectangular problem with h > r and a nontrivial nuisance block."""
    return ProblemSpec.build(
        synthesize_target(5, 4, 2, 2.0),
        h=4,
        r=2,
        alpha=1.0,
        delta=1.0 / 128.0,
        epsilon=1e-2,
        eta=1e-2,
    )


@pytest.fixture
def identity_op_small(small_spec):
    return identity_operator(small_spec.m, small_spec.n)


@pytest.fixture
def gaussian_op_small(small_spec):
    return gaussian_operator(small_spec.m, small_spec.n, 6 * (5 + 4) * 2, seed=11)


@pytest.fixture(scope="session")
def reference_run(tmp_path_factory):
    out_dir = tmp_path_factory.mktemp("reference")
    result = run(ExperimentConfig(**REFERENCE), out_dir)
    return result, out_dir
