import numpy as np
import pytest

from app.dynamics.flow import perturbation_E
from app.dynamics.steppers import gd_step_lifted
from app.lifted.state import derive
from app.measurement.operators import identity_operator
from app.monitors.bounds import (assumption_report, e_bound_report,
                                 final_error_bound, final_error_report,
                                 run_beta)
from app.monitors.derivative_signs import Phase, derivative_sign_suite
from app.monitors.identities import identity_suite
from app.monitors.local import (LOCAL_ITEMS, local_report, mr_infinity,
                                phase_bounds)
from app.monitors.quantities import measure
from app.monitors.schema import BoundKind, InvariantReport
from app.monitors.warmup import WARMUP_ITEMS, warmup_bitmask, warmup_report
from tests.utils.states import random_state


def _exact_factorization(spec):
    W = np.zeros((spec.D, spec.h))
    root = np.sqrt(np.diag(spec.Y)[: spec.r])
    idx = np.arange(spec.r)
    W[idx, idx] = root
    W[spec.m + idx, idx] = root
    return W


class TestInvariantReport:
    """Tests for per-item verdicts, slack and bitmasks"""

    def test_upper_slack(self):
        """Test an upper bound tolerates roundoff but not real violations"""
        report = InvariantReport(t=0.0)
        assert report.add_upper("tight", 1.0 + 1e-10, 1.0).passed
        assert not report.add_upper("loose", 1.0 + 1e-6, 1.0).passed
        assert report.items["loose"].margin == pytest.approx(-1e-6)
        assert report.failures() == ["loose"]
        assert not report.passed

    def test_lower_bound(self):
        """Test lower bounds use value - bound as margin"""
        report = InvariantReport(t=0.0)
        item = report.add_lower("floor", 2.0, 1.5)
        assert item.passed
        assert item.kind == BoundKind.LOWER
        assert item.margin == pytest.approx(0.5)

    def test_inactive_items_pass(self):
        """Test an inactive item passes regardless of its value"""
        report = InvariantReport(t=1.0)
        item = report.add_inactive("off", 5.0, 1.0, "preconditions fail")
        lower = report.add_inactive("off_low", 5.0, 1.0, "n/a", BoundKind.LOWER)
        assert item.passed and not item.active
        assert item.margin == pytest.approx(-4.0)
        assert lower.margin == pytest.approx(4.0)
        assert report.active_items() == []

    def test_identity_tolerance(self):
        """Test identity residuals are scaled by max(1, scale)"""
        report = InvariantReport(t=0.0)
        assert report.add_identity("small", 5e-11).passed
        assert report.add_identity("scaled", 5e-10, scale=10.0).passed
        assert not report.add_identity("large", 1e-8).passed

    def test_bitmask_is_lsb_first(self):
        """Test bit i reflects the i-th named item"""
        report = InvariantReport(t=0.0)
        report.add_upper("a", 0.0, 1.0)
        report.add_upper("b", 2.0, 1.0)
        report.add_upper("c", 0.0, 1.0)
        assert report.bitmask(["a", "b", "c"]) == 0b101
        assert report.bitmask(["b"]) == 0


class TestWarmupMonitor:
    """Tests for the warm-up invariant bounds"""

    def test_initial_state_passes(self, reference_spec, reference_W0):
        """Test the reference initialization satisfies every warm-up bound"""
        report = warmup_report(derive(reference_W0, reference_spec), reference_spec)
        assert report.passed, report.failures()
        assert warmup_bitmask(report) == 2 ** len(WARMUP_ITEMS) - 1
        assert report.info["in_phase"]

    def test_calibrated_delta_passes(self, reference_spec, reference_W0):
        """Test the calibrated delta keeps the initial state inside"""
        spec = reference_spec.with_delta_eff(reference_spec.epsilon / 4.0)
        assert warmup_report(derive(reference_W0, spec), spec).passed

    def test_scaled_state_fails_norm(self, reference_spec, reference_W0):
        """Test ||W|| = 2 sqrt(||Y||) misses the bound by sqrt(||Y||) / 2"""
        scale = 2.0 * reference_spec.sqrt_normY / reference_spec.epsilon
        state = derive(scale * reference_W0, reference_spec)
        report = warmup_report(state, reference_spec)
        item = report.items["W_norm"]
        assert not item.passed
        assert item.margin == pytest.approx(-0.5 * reference_spec.sqrt_normY)
        assert warmup_bitmask(report) & 1 == 0


class TestLocalMonitor:
    """Tests for the local-phase bounds"""

    def test_bound_at_warmup_end(self, reference_spec):
        """Test M^R at T1 is 3 ||Y||"""
        bounds = phase_bounds(reference_spec, reference_spec.T1)
        assert bounds.MR_t == pytest.approx(6.0)
        assert bounds.MR_inf < 6.0

    def test_bound_is_nonincreasing(self, reference_spec):
        """Test M^R_t decreases to its floor"""
        times = np.linspace(reference_spec.T1, 10.0 * reference_spec.T2, 50)
        values = [phase_bounds(reference_spec, t).MR_t for t in times]
        assert np.all(np.diff(values) <= 0.0)
        assert values[-1] == pytest.approx(mr_infinity(reference_spec))

    def test_beta_variants(self, reference_spec):
        """Test the larger beta gives a larger floor"""
        assert mr_infinity(reference_spec, reference_spec.beta_4) > mr_infinity(
            reference_spec
        )

    def test_exact_solution_passes(self, reference_spec):
        """Test R = 0 satisfies the local bounds"""
        spec = reference_spec
        state = derive(_exact_factorization(spec), spec, t=spec.T2)
        report = local_report(state, spec)
        assert report.passed
        assert list(report.items) == LOCAL_ITEMS
        assert report.items["R_norm"].value == pytest.approx(0.0, abs=1e-14)


class TestIdentitySuite:
    """Tests for the unconditional identities"""

    def test_random_states(self, rng, small_spec, reference_spec):
        """Test every identity holds on 100 arbitrary states of two shapes"""
        for spec in (small_spec, reference_spec):
            for scale in rng.uniform(0.05, 1.5, size=50):
                report = identity_suite(random_state(spec, rng, scale))
                assert report.passed, (spec.m, spec.n, scale, report.failures())

    def test_reference_state(self, reference_spec, reference_W0):
        """Test the identities at the reference initialization"""
        assert identity_suite(derive(reference_W0, reference_spec)).passed

    def test_degenerate_state(self, small_spec):
        """Test split identities are skipped without a full-rank A"""
        W = np.zeros((small_spec.D, small_spec.h))
        report = identity_suite(derive(W, small_spec, strict=False))
        assert report.passed
        assert "Q_idempotent" not in report.items
        assert report.info["split_identities"].startswith("skipped")


class TestPerturbationBound:
    """Tests for the gated ||E|| bound"""

    def _record(self, spec, W0):
        op = identity_operator(spec.m, spec.n)
        return gd_step_lifted(derive(W0, spec), op, spec, k=0)

    def test_inactive_for_large_steps(self, reference_spec, reference_W0):
        """Test the bound is not asserted when beta exceeds 1/4"""
        assert run_beta(reference_spec) == pytest.approx(0.4)
        rec = self._record(reference_spec, reference_W0)
        report = e_bound_report(rec, 0.5, reference_spec)
        assert not report.info["applicable"]
        assert not report.items["perturbation_bound"].active
        assert report.passed

    def test_active_for_small_steps(self, reference_spec, reference_W0):
        """Test the bound holds once its preconditions do"""
        spec = reference_spec.model_copy(update={"eta": 1e-4})
        rec = self._record(spec, reference_W0)
        for s in (0.0, 0.5, 1.0):
            report = e_bound_report(rec, s, spec)
            assert report.info["applicable"]
            assert report.items["perturbation_bound"].active
            assert report.passed, report.failures()
            assert not report.items["trajectory_bound"].active


class TestDerivativeSigns:
    """Tests for the boundary derivative inequalities"""

    def _suite(self, spec, W0, phase):
        op = identity_operator(spec.m, spec.n)
        state = derive(W0, spec)
        rec = gd_step_lifted(state, op, spec, k=0)
        return derivative_sign_suite(state, perturbation_E(rec, 0.0, spec), spec, phase)

    def test_warmup_at_start(self, reference_spec, reference_W0):
        """Test sigma_r(A) grows fast enough and the nuisance stays put"""
        report = self._suite(reference_spec, reference_W0, Phase.WARMUP)
        assert report.passed, report.failures()
        assert report.items["d_A_bottom"].active
        assert report.items["d_Wtilde"].active
        assert not report.items["d_W"].active
        assert report.info["phase"] == "warmup"

    def test_local_far_from_boundary(self, reference_spec, reference_W0):
        """Test the local inequalities are dormant at the start"""
        report = self._suite(reference_spec, reference_W0, Phase.LOCAL)
        assert report.passed
        assert report.active_items() == []

    def test_measured_norms_shared(self, reference_spec, reference_W0):
        """Test precomputed norms give the same verdicts"""
        state = derive(reference_W0, reference_spec)
        norms = measure(state)
        E = np.zeros((reference_spec.D, reference_spec.D))
        a = derivative_sign_suite(state, E, reference_spec, Phase.WARMUP, norms)
        b = derivative_sign_suite(state, E, reference_spec, Phase.WARMUP)
        assert a.items == b.items


class TestFinalReports:
    """Tests for the end-of-run and assumption reports"""

    def test_final_error_of_exact_solution(self, reference_spec):
        """Test the exact factorization passes every end-of-run item"""
        spec = reference_spec
        state = derive(_exact_factorization(spec), spec, t=spec.T2)
        report = final_error_report(state, spec)
        assert report.passed, report.failures()
        assert report.items["exponent"].active
        expected = final_error_bound(spec)
        assert report.info["final_error_bound"] == pytest.approx(expected)
        assert report.info["epsilon_power"] == pytest.approx(1.0)

    def test_assumption_flags_large_eta(self, reference_spec):
        """Test the reference learning rate exceeds the end-time assumption"""
        report = assumption_report(reference_spec, op_N=144)
        assert report.failures() == ["learning_rate"]
        assert report.info["measurements"] == 144
        assert report.info["steps_run"] == pytest.approx(reference_spec.T2 / 1e-2)


class TestMeasurementErrorAudit:
    """Tests for the measured ||E^A|| against its RIP bound"""

    def test_inactive_without_target(self, rng, small_spec, gaussian_op_small):
        """Test the audit is dormant when no RIP constant is claimed"""
        state = random_state(small_spec, rng)
        rec = gd_step_lifted(state, gaussian_op_small, small_spec, k=0)
        report = e_bound_report(rec, 0.0, small_spec)
        item = report.items["measurement_error_bound"]
        assert not item.active
        assert report.info["norm_EA"] > 0.0

    def test_generous_target_holds(self, rng, small_spec, gaussian_op_small):
        """Test a generous RIP target bounds the measured error"""
        spec = small_spec.model_copy(update={"rho_target": 1.0})
        state = random_state(spec, rng)
        rec = gd_step_lifted(state, gaussian_op_small, spec, k=0)
        item = e_bound_report(rec, 0.0, spec).items["measurement_error_bound"]
        assert item.active
        assert item.passed
