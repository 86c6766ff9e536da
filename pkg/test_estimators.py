#!/usr/bin/env python3
"""
Tests for the Monte Carlo estimators.
"""

import math
import sys
from pathlib import Path

import numpy as np
import pytest
from numpy.testing import assert_array_equal

sys.path.insert(0, str(Path(__file__).parent))

from src.analysis.bounds import (
    BoundInputs,
    auxiliary_constants,
    lyapunov_exit_bound,
    mh_contraction_factor,
    rejection_bound,
)
from src.analysis.estimators import (
    estimate_contraction_rate,
    estimate_dimension_profile,
    estimate_exit_probability,
    estimate_rejection_curve,
    estimate_rejection_probability,
    finite_difference_check,
    fit_contraction_slope,
    fit_exit_constant,
    fit_power_law,
    fit_scaling_exponent,
    gaussian_lyapunov_expectation,
    lyapunov_drift_check,
    minus_norm_moments,
    wasserstein_1d,
)
from src.models.quadratic import make_quadratic_model, zero_model
from src.models.tps import alpha_norm_space, make_tps_model
from src.sampling.core_mh import NormSpace, ProposalKind, ProposalSpec, grad_U, log_g, propose, run_chain
from src.utils.random_streams import derive_stream


def equilibrated(model, seed=0, steps=200, h=0.05):
    rng = derive_stream(seed, 0)
    start = rng.standard_normal(model.d)
    return run_chain(ProposalSpec(ProposalKind.SEMI_IMPLICIT, h), model, start, steps, rng).final_state


class TestRejection:
    def test_gaussian_never_rejects(self):
        estimate = estimate_rejection_probability(ProposalSpec(ProposalKind.SEMI_IMPLICIT, 0.3), zero_model(4),
                                                  np.ones(4), 5000, 1)
        assert estimate.value == 0.0
        assert estimate.std_error == 0.0
        assert estimate.upper() == 0.0

    def test_ou_acceptance_does_not_depend_on_step_label(self):
        model = make_tps_model(m=3)
        rng = np.random.default_rng(0)
        x = rng.standard_normal(model.d)
        y = propose(ProposalSpec(ProposalKind.OU, 0.3), model, x, rng.standard_normal((100, model.d)))
        first = log_g(ProposalSpec(ProposalKind.OU, 0.1), model, np.broadcast_to(x, y.shape), y)
        second = log_g(ProposalSpec(ProposalKind.OU, 1.5), model, np.broadcast_to(x, y.shape), y)
        assert_array_equal(first, second)

    def test_below_analytic_bound(self):
        model, fragment = make_quadratic_model(1, 0.25)
        h = 0.1
        estimate = estimate_rejection_probability(ProposalSpec(ProposalKind.SEMI_IMPLICIT, h), model,
                                                  np.zeros(1), 50_000, 2)
        inputs = BoundInputs(C=fragment["C"], moments=minus_norm_moments(model.space), h=h)
        assert estimate.lower() <= rejection_bound(inputs, "semi_implicit", grad_u_norm=0.0)

    @pytest.mark.parametrize("case", range(20))
    @pytest.mark.parametrize("kind", [ProposalKind.OU, ProposalKind.SEMI_IMPLICIT])
    def test_below_analytic_bound_at_random_points(self, kind, case):
        rng = np.random.default_rng(1000 + case)
        x = rng.uniform(-2.0, 2.0, 1)
        h = float(rng.uniform(0.01, 0.5))
        model, fragment = make_quadratic_model(1, 0.25)
        estimate = estimate_rejection_probability(ProposalSpec(kind, h), model, x, 20_000, case)
        inputs = BoundInputs(C=fragment["C"], moments=minus_norm_moments(model.space), h=h)
        if kind is ProposalKind.OU:
            bound = rejection_bound(inputs, "ou_p2zero", x_norm=float(model.space.minus(x)))
        else:
            bound = rejection_bound(inputs, "semi_implicit", grad_u_norm=float(model.space.minus(grad_U(model, x))))
        assert estimate.lower() <= bound

    def test_reproducible_from_seed(self):
        model, _ = make_quadratic_model(2, [0.25, 1.0])
        spec = ProposalSpec(ProposalKind.OU, 0.4)
        first = estimate_rejection_probability(spec, model, np.ones(2), 30_000, 17)
        second = estimate_rejection_probability(spec, model, np.ones(2), 30_000, 17)
        assert first.value == second.value
        assert first.std_error == second.std_error

    def test_worker_count_does_not_change_result(self, monkeypatch):
        model, _ = make_quadratic_model(2, [0.25, 1.0])
        spec = ProposalSpec(ProposalKind.SEMI_IMPLICIT, 0.4)
        monkeypatch.delenv("MHCONTRACT_WORKERS", raising=False)
        sequential = estimate_rejection_probability(spec, model, np.ones(2), 50_000, 5)
        monkeypatch.setenv("MHCONTRACT_WORKERS", "3")
        threaded = estimate_rejection_probability(spec, model, np.ones(2), 50_000, 5)
        assert sequential.value == threaded.value


class TestPowerLawFit:
    def test_exact_power_law(self):
        h = np.array([0.02, 0.04, 0.08, 0.16])
        estimates = 0.7 * h ** 1.5
        fit = fit_power_law(h, estimates, 0.01 * estimates)
        assert abs(fit.slope - 1.5) <= 1e-12
        assert fit.prefactor == pytest.approx(0.7)
        assert fit.used.all()

    def test_noisy_points_dropped(self):
        h = np.array([0.01, 0.02, 0.04, 0.08])
        estimates = h ** 0.5
        errors = np.array([0.5, 0.001, 0.001, 0.001]) * estimates
        fit = fit_power_law(h, estimates, errors)
        assert not fit.used[0]
        assert fit.slope == pytest.approx(0.5)

    def test_too_few_points(self):
        with pytest.raises(ValueError):
            fit_power_law([0.1, 0.2, 0.3], [0.1, 0.2, 0.3], [0.0, 0.0, 0.0])
        with pytest.raises(ValueError):
            fit_power_law([0.1, 0.3, 0.2, 0.4], [0.1, 0.2, 0.3, 0.4], [0.0] * 4)
        with pytest.raises(ValueError):
            fit_power_law([0.1, 0.2, 0.3, 0.4], [0.0, 0.0, 0.3, 0.4], [0.0] * 4)

    def test_curve_uses_one_stream_per_step(self):
        model, _ = make_quadratic_model(1, 0.25)
        curve = estimate_rejection_curve(ProposalKind.SEMI_IMPLICIT, model, np.ones(1), [0.1, 0.2], 10_000, 3)
        single = estimate_rejection_probability(ProposalSpec(ProposalKind.SEMI_IMPLICIT, 0.2), model, np.ones(1),
                                                10_000, derive_stream(3, 1))
        assert curve[1].value == single.value


class TestScalingExponents:
    GRID = [0.02, 0.04, 0.08, 0.16]

    def test_ou_exponent(self):
        model = make_tps_model(m=5)
        fit = fit_scaling_exponent(ProposalKind.OU, model, equilibrated(model), self.GRID, 100_000, 1)
        assert 0.35 <= fit.slope <= 0.65

    def test_semi_implicit_exponent(self):
        model = make_tps_model(m=5)
        fit = fit_scaling_exponent(ProposalKind.SEMI_IMPLICIT, model, equilibrated(model), self.GRID, 100_000, 2)
        assert 1.3 <= fit.slope <= 1.7

    def test_dimension_independence(self):
        models = [make_tps_model(m=m) for m in range(3, 9)]
        points = [equilibrated(model, seed=model.d) for model in models]
        profile = estimate_dimension_profile(ProposalKind.SEMI_IMPLICIT, 0.05, models, points, 50_000, 4)
        assert profile.dimensions == [7, 15, 31, 63, 127, 255]
        assert profile.ratio <= 2.0


class TestContraction:
    def test_gaussian_ou_ratio(self):
        h = 0.3
        estimate = estimate_contraction_rate(ProposalSpec(ProposalKind.OU, h), zero_model(2), [1.0, 0.0],
                                             [0.0, 1.0], 10_000, 0)
        assert estimate.value == pytest.approx(1.0 - h / 2.0, rel=1e-12)
        assert estimate.std_error <= 1e-12
        assert estimate.extra["events"]["both_accept"] == 10_000

    def test_quadratic_below_mh_factor(self):
        model, fragment = make_quadratic_model(1, 0.25)
        h = 0.01
        spec = ProposalSpec(ProposalKind.SEMI_IMPLICIT, h)
        estimate = estimate_contraction_rate(spec, model, [0.5], [-0.5], 50_000, 1)
        inputs = BoundInputs(K=fragment["K"], M_R=fragment["M_R"], C=fragment["C"],
                             moments=minus_norm_moments(model.space), h=h, R=1.0)
        aux = auxiliary_constants(inputs, grad_u_sup=fragment["M_R"] * inputs.R)
        assert estimate.lower() <= mh_contraction_factor(inputs, ProposalKind.SEMI_IMPLICIT, aux)

    def test_concave_model_expands(self):
        model, _ = make_quadratic_model(1, -1.5)
        estimate = estimate_contraction_rate(ProposalSpec(ProposalKind.SEMI_IMPLICIT, 0.01), model, [0.5], [-0.5],
                                             20_000, 2)
        assert estimate.value > 1.0

    def test_leading_order_slope(self):
        model, _ = make_quadratic_model(1, 0.25)
        result = fit_contraction_slope(ProposalKind.SEMI_IMPLICIT, model, [0.5], [-0.5], [0.005, 0.01, 0.02],
                                       50_000, 3)
        assert result["slope"] == pytest.approx(0.625, rel=0.1)

    def test_distinct_points_required(self):
        with pytest.raises(ValueError):
            estimate_contraction_rate(ProposalSpec(ProposalKind.OU, 0.3), zero_model(1), [1.0], [1.0], 10, 0)


class TestExit:
    def test_huge_radius(self):
        estimate = estimate_exit_probability(ProposalSpec(ProposalKind.SEMI_IMPLICIT, 0.1), zero_model(2),
                                             np.zeros(2), 1e6, 50, 20, 0)
        assert estimate.value == 0.0
        assert (estimate.extra["exit_steps"] == -1).all()

    def test_fitted_constant_dominates(self):
        model, fragment = make_quadratic_model(1, 0.25)
        spec = ProposalSpec(ProposalKind.SEMI_IMPLICIT, 0.05)
        n, R = 1000, 2.5
        estimate = estimate_exit_probability(spec, model, np.zeros(1), R, n, 200, 1)
        K = fragment["K"]
        D = fit_exit_constant(estimate.value, K, 0.0, R, n, spec.h)
        bound = lyapunov_exit_bound(BoundInputs(K=K, h=spec.h, R=R, unspecified={"D_exit": D}), 0.0, n)
        assert bound.raw >= estimate.value - 1e-12

    def test_larger_radius_exits_less(self):
        model, _ = make_quadratic_model(1, 0.25)
        spec = ProposalSpec(ProposalKind.SEMI_IMPLICIT, 0.1)
        near = estimate_exit_probability(spec, model, np.zeros(1), 1.5, 300, 200, 2)
        far = estimate_exit_probability(spec, model, np.zeros(1), 2.5, 300, 200, 2)
        assert far.value <= near.value

    def test_start_outside_ball(self):
        with pytest.raises(ValueError):
            estimate_exit_probability(ProposalSpec(ProposalKind.OU, 0.1), zero_model(1), [3.0], 2.0, 10, 5, 0)


class TestWasserstein:
    def test_identical(self):
        assert wasserstein_1d([0.3, -1.0, 2.0], [2.0, 0.3, -1.0]) == 0.0

    def test_point_masses(self):
        assert wasserstein_1d([0.0], [1.0]) == pytest.approx(1.0)
        assert wasserstein_1d([0.0, 0.0], [0.0, 2.0]) == pytest.approx(1.0)

    def test_unequal_sizes(self):
        assert wasserstein_1d([0.0], [0.0, 2.0]) == pytest.approx(1.0)

    def test_empty(self):
        with pytest.raises(ValueError):
            wasserstein_1d([], [1.0])

    @pytest.mark.parametrize("sizes", [(500, 500, 500), (300, 700, 450)])
    def test_metric_properties(self, sizes):
        rng = np.random.default_rng(sum(sizes))
        a = rng.standard_normal(sizes[0])
        b = rng.standard_t(3, sizes[1]) + 0.4
        c = rng.exponential(1.0, sizes[2])
        assert wasserstein_1d(a, b) == pytest.approx(wasserstein_1d(b, a), rel=1e-12)
        assert wasserstein_1d(a, c) <= wasserstein_1d(a, b) + wasserstein_1d(b, c) + 1e-12


class TestFiniteDifferences:
    def test_quadratic_is_exact(self):
        points = np.random.default_rng(0).standard_normal((5, 3))
        error = finite_difference_check(lambda x: 0.5 * float(np.dot(x, x)), lambda x: x, points, fd_step=1e-5)
        assert error <= 1e-9

    def test_wrong_gradient_detected(self):
        points = np.random.default_rng(1).standard_normal((5, 3))
        error = finite_difference_check(lambda x: 0.5 * float(np.dot(x, x)), lambda x: 2.0 * x, points)
        assert error == pytest.approx(1.0, rel=1e-6)

    def test_tps_potential(self):
        model = make_tps_model(m=4)
        points = 0.5 * np.random.default_rng(2).standard_normal((3, model.d))
        assert finite_difference_check(lambda x: float(model.value(x)), model.gradient, points) <= 1e-6

    def test_step_must_be_positive(self):
        with pytest.raises(ValueError):
            finite_difference_check(lambda x: 0.0, lambda x: x, np.zeros((1, 2)), fd_step=0.0)


class TestMoments:
    def test_chi_moments(self):
        moments = minus_norm_moments(NormSpace.euclidean(1))
        assert moments[1] == pytest.approx(math.sqrt(2.0 / math.pi))
        assert moments[2] == pytest.approx(1.0)
        assert minus_norm_moments(NormSpace.euclidean(5), orders=(2,))[2] == pytest.approx(5.0)

    def test_weighted_moments_by_sampling(self):
        space = alpha_norm_space(3, alpha=0.6)
        moments = minus_norm_moments(space, orders=(2,), n_samples=200_000)
        assert moments[2] == pytest.approx(float(np.sum(space.weights)), rel=0.02)


class TestLyapunovDrift:
    def test_gaussian_closed_form(self):
        K, h = 1.0, 0.1
        spec = ProposalSpec(ProposalKind.SEMI_IMPLICIT, h)
        records = lyapunov_drift_check(spec, zero_model(1), K, [[0.0]], 100_000, 0, c2=1.0)
        sigma = math.sqrt(h - h * h / 4.0)
        expected = math.log(gaussian_lyapunov_expectation(1.0 - h / 2.0, sigma, [0.0], K)) / h
        assert records[0]["x_norm"] == 0.0
        assert records[0]["fitted_C2"] == pytest.approx(expected, rel=0.1)
        assert records[0]["passes"]

    def test_stable_across_seeds(self):
        spec = ProposalSpec(ProposalKind.SEMI_IMPLICIT, 0.1)
        first = lyapunov_drift_check(spec, zero_model(1), 1.0, [[0.0]], 100_000, 1)[0]["fitted_C2"]
        second = lyapunov_drift_check(spec, zero_model(1), 1.0, [[0.0]], 100_000, 2)[0]["fitted_C2"]
        assert math.isfinite(first)
        assert second == pytest.approx(first, rel=0.2)

    def test_expectation_closed_form(self):
        assert gaussian_lyapunov_expectation(1.0, 0.0, [2.0], 0.5) == pytest.approx(math.exp(0.125))


def main():
    """Run the tests in this file."""
    print("🧪 Estimator tests")
    print("=" * 50)
    return pytest.main([__file__, "-q"])


if __name__ == "__main__":
    sys.exit(main())
