import numpy as np
import pytest

from app.core.errors import ShapeMismatch, StepTooLarge
from app.dynamics.steppers import (GUARD, gd_step_factored, gd_step_lifted,
                                   step_guard)
from app.lifted.state import derive, split
from tests.utils.states import random_state


class TestGradientStep:
    """Tests for the factored and lifted gradient steps"""

    @pytest.mark.parametrize("kind", ["identity", "gaussian"])
    def test_lifted_matches_factored(
        self, rng, small_spec, kind, identity_op_small, gaussian_op_small
    ):
        """Test the lifted step reproduces the factored update"""
        op = identity_op_small if kind == "identity" else gaussian_op_small
        state = random_state(small_spec, rng)
        rec = gd_step_lifted(state, op, small_spec, k=0)
        U, V = split(state.W, small_spec.m)
        U1, V1 = gd_step_factored(U, V, op, small_spec.Y, small_spec.eta)

        assert np.allclose(rec.W_after, np.vstack([U1, V1]), atol=1e-14)
        assert rec.guard <= GUARD
        assert np.allclose(rec.growth_matrix(), rec.growth_matrix().T)

    def test_identity_operator_has_no_perturbation(
        self, rng, small_spec, identity_op_small
    ):
        """Test E^A vanishes so Rtilde = R"""
        rec = gd_step_lifted(random_state(small_spec, rng), identity_op_small, small_spec)
        assert not np.any(rec.EA_hat_k)
        assert np.array_equal(rec.Rtilde_k, rec.R_k)

    def test_fixed_point(self, small_spec, gaussian_op_small):
        """Test a factorization of Y is left unchanged"""
        U = np.zeros((small_spec.m, small_spec.h))
        V = np.zeros((small_spec.n, small_spec.h))
        root = np.sqrt(np.diag(small_spec.Y)[: small_spec.r])
        U[np.arange(2), np.arange(2)] = root
        V[np.arange(2), np.arange(2)] = root
        U1, V1 = gd_step_factored(U, V, gaussian_op_small, small_spec.Y, 0.1)
        assert np.array_equal(U1, U)
        assert np.array_equal(V1, V)

    def test_step_index_from_time(self, rng, small_spec, identity_op_small):
        """Test k is recovered from the state time when omitted"""
        state = derive(random_state(small_spec, rng).W, small_spec, t=0.07)
        rec = gd_step_lifted(state, identity_op_small, small_spec)
        assert rec.k == 7
        assert rec.time_at(0.5) == pytest.approx(0.075)

    def test_inconsistent_shapes(self, small_spec, identity_op_small):
        """Test mismatched factor shapes raise ShapeMismatch"""
        with pytest.raises(ShapeMismatch):
            gd_step_factored(
                np.zeros((5, 2)), np.zeros((4, 3)), identity_op_small, small_spec.Y, 0.1
            )


class TestStepGuard:
    """Tests for the eta * ||Rtilde|| <= 2/3 guard"""

    def test_too_large_step_raises(self, small_spec, identity_op_small):
        """Test a unit learning rate is refused at the origin"""
        spec = small_spec.model_copy(update={"eta": 1.0})
        state = derive(np.zeros((spec.D, spec.h)), spec, strict=False)
        with pytest.raises(StepTooLarge) as exc:
            gd_step_lifted(state, identity_op_small, spec, k=3)
        assert exc.value.step == 3
        assert exc.value.guard_value == pytest.approx(2.0)
        assert str(exc.value).startswith("step 3:")

    def test_guard_is_spectral(self):
        """Test the guard uses the spectral norm, not the Frobenius norm"""
        M = np.eye(4)
        assert step_guard(M, 0.1) == pytest.approx(0.1)
        assert step_guard(np.eye(9), 0.5) == pytest.approx(0.5)

    def test_recorded_guard(self, rng, small_spec, gaussian_op_small):
        """Test the step record stores eta times the spectral norm of Rtilde"""
        rec = gd_step_lifted(random_state(small_spec, rng), gaussian_op_small, small_spec)
        expected = small_spec.eta * np.linalg.norm(rec.Rtilde_k, 2)
        assert rec.guard == pytest.approx(expected, rel=1e-12)
        assert rec.guard < small_spec.eta * np.linalg.norm(rec.Rtilde_k)
