import math

import numpy as np
import pytest

from app.core.errors import NotSymmetric, RankDeficient, ZeroMatrix
from app.dynamics.derivatives import (central_difference, dF_dt, dQ_dt, dR_dt,
                                      dW_dt, dWtilde_dt, dX_dt,
                                      imbalance_derivative, richardson_ratio,
                                      singular_pair_derivative,
                                      tracked_derivative, tracked_matrix)
from app.dynamics.schema import TrackedQuantity
from app.linalg.decompositions import sigma_k, spectral_norm, sym_eig
from app.lifted.state import derive
from tests.utils.states import random_state, random_symmetric

STEP = 1e-5


def _along_velocity(state, E, field):
    """Central difference of a derived field along the direction (R + E) W."""
    Wdot = dW_dt(state, E)

    def fn(tau: float):
        return field(derive(state.W + tau * Wdot, state.spec))

    return central_difference(fn, 0.0, STEP, 1.0)


def _close(analytic, numeric, rel=1e-6):
    scale = max(1.0, float(np.linalg.norm(analytic)))
    return float(np.linalg.norm(analytic - numeric)) <= rel * scale


@pytest.fixture
def state_and_E(rng, small_spec):
    state = random_state(small_spec, rng)
    return state, 0.1 * random_symmetric(small_spec.D, rng)


class TestMatrixDerivatives:
    """Tests for the analytic derivatives against central differences"""

    def test_residual(self, state_and_E):
        """Test dR/dt"""
        state, E = state_and_E
        assert _close(dR_dt(state, E), _along_velocity(state, E, lambda s: s.R))

    def test_lifted_gram(self, state_and_E):
        """Test dX/dt"""
        state, E = state_and_E
        assert _close(dX_dt(state, E), _along_velocity(state, E, lambda s: s.X))

    def test_imbalance(self, state_and_E):
        """Test d/dt W^T J W = W^T (E^T J + J E) W"""
        state, E = state_and_E
        numeric = _along_velocity(state, E, lambda s: s.imbalance)
        assert _close(imbalance_derivative(state, E), numeric)

    def test_imbalance_conserved_without_perturbation(self, state_and_E):
        """Test the imbalance is conserved by the exact gradient flow"""
        state, _ = state_and_E
        zero = np.zeros_like(state.R)
        assert np.allclose(imbalance_derivative(state, zero), 0.0)

    def test_projection(self, state_and_E):
        """Test dQ/dt"""
        state, E = state_and_E
        assert _close(dQ_dt(state, E), _along_velocity(state, E, lambda s: s.Q))

    def test_signal_ratio(self, state_and_E):
        """Test dF/dt"""
        state, E = state_and_E
        assert _close(dF_dt(state, E), _along_velocity(state, E, lambda s: s.F))

    def test_nuisance(self, state_and_E):
        """Test dWtilde/dt"""
        state, E = state_and_E
        numeric = _along_velocity(state, E, lambda s: s.Wtilde)
        assert _close(dWtilde_dt(state, E), numeric)

    def test_projected_nuisance(self, state_and_E):
        """Test the product rule for P_N W Q"""
        state, E = state_and_E
        which = TrackedQuantity.PNWQ
        numeric = _along_velocity(state, E, lambda s: tracked_matrix(s, which))
        assert _close(tracked_derivative(state, E, which), numeric)

    def test_degenerate_state(self, small_spec):
        """Test quantities of the split need a full-rank A"""
        state = derive(np.zeros((small_spec.D, small_spec.h)), small_spec, strict=False)
        E = np.zeros((small_spec.D, small_spec.D))
        with pytest.raises(RankDeficient):
            dF_dt(state, E)
        with pytest.raises(RankDeficient):
            tracked_matrix(state, TrackedQuantity.WTILDE)

    def test_asymmetric_perturbation(self, state_and_E):
        """Test an asymmetric E is rejected"""
        state, E = state_and_E
        E = E.copy()
        E[0, 1] += 1.0
        with pytest.raises(NotSymmetric):
            dF_dt(state, E)
        with pytest.raises(NotSymmetric):
            dWtilde_dt(state, E)


SCALARS = {
    TrackedQuantity.W: lambda s: spectral_norm(s.W),
    TrackedQuantity.A_BOTTOM: lambda s: sigma_k(s.A, s.spec.r),
    TrackedQuantity.R: lambda s: sym_eig(s.R).eigenvalues[0],
    TrackedQuantity.PPX: lambda s: sym_eig(
        s.spec.PP @ s.X @ s.spec.PP.T
    ).eigenvalues[0],
    TrackedQuantity.PNW: lambda s: spectral_norm(s.spec.PN @ s.W),
    TrackedQuantity.F: lambda s: spectral_norm(s.F),
    TrackedQuantity.WTILDE: lambda s: spectral_norm(s.Wtilde),
    TrackedQuantity.PNWQ: lambda s: spectral_norm(s.spec.PN @ s.W @ s.Q),
    TrackedQuantity.PAJW: lambda s: spectral_norm(s.spec.PA @ s.spec.J @ s.W),
}


class TestSingularPairDerivative:
    """Tests for derivatives of tracked singular values and eigenvalues"""

    @pytest.mark.parametrize("which", list(SCALARS), ids=lambda q: q.value)
    def test_matches_difference(self, state_and_E, which):
        """Test u^T (dM/dt) v against a difference of the tracked scalar"""
        state, E = state_and_E
        analytic = singular_pair_derivative(state, E, which)
        numeric = _along_velocity(state, E, SCALARS[which])
        assert analytic == pytest.approx(float(numeric), rel=1e-5, abs=1e-7)

    def test_zero_matrix(self, small_spec):
        """Test a vanishing tracked matrix has no singular pair"""
        state = derive(np.zeros((small_spec.D, small_spec.h)), small_spec, strict=False)
        E = np.zeros((small_spec.D, small_spec.D))
        with pytest.raises(ZeroMatrix):
            singular_pair_derivative(state, E, TrackedQuantity.W)


class TestRichardsonRatio:
    """Tests for the step-halving error ratio"""

    def test_second_order(self):
        """Test a second-order error shrinks fourfold"""
        assert richardson_ratio(4e-6, 1e-6) == pytest.approx(4.0)

    def test_zero_fine_error(self):
        """Test an exact fine difference gives an infinite ratio"""
        assert math.isinf(richardson_ratio(1e-9, 0.0))

    def test_central_difference_of_quadratic(self):
        """Test the central difference is exact for a quadratic"""
        def fn(s):
            return np.array([[3.0 * s**2 + s]])

        assert central_difference(fn, 0.5, 0.1, 2.0)[0, 0] == pytest.approx(2.0)
