"""Closed forms and validators: divergence contraction, bias bounds, parity limit."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fairnoise import theory
from fairnoise.dataset import synth_biased
from fairnoise.strategies import fit_baseline, fit_threshold_optimizer
from fairnoise.strategies.threshold import ThresholdPolicy
from fairnoise.theory import (GaussianSpec, ScoreRange, TheoryError,
                              bhattacharyya, bhattacharyya_gaussian,
                              eo_bias_bounds, l2_inner_product,
                              max_dp_under_noise, simulate_max_dp,
                              verify_convergence, verify_eo_bounds_empirical)


class TestInnerProduct:
    def test_squared_normal_density(self):
        phi = GaussianSpec(0.0, 1.0).pdf
        value = l2_inner_product(phi, phi, -10.0, 10.0)
        assert value == pytest.approx(1.0 / (2.0 * math.sqrt(math.pi)), abs=1e-10)

    def test_disjoint_indicators_orthogonal(self):
        u = lambda x: 1.0 if 0.0 <= x <= 1.0 else 0.0
        v = lambda x: 1.0 if 2.0 <= x <= 3.0 else 0.0
        assert l2_inner_product(u, v, -5.0, 5.0) == pytest.approx(0.0, abs=1e-10)

    def test_unit_functions(self):
        one = lambda x: 1.0
        assert l2_inner_product(one, one, 0.0, 1.0) == pytest.approx(1.0, abs=1e-12)


class TestBhattacharyya:
    def test_identical_distributions(self):
        p = GaussianSpec(0.3, 1.2)
        bc, dist = bhattacharyya(p.pdf, p.pdf, -20, 20)
        assert bc == pytest.approx(1.0, abs=1e-9)
        assert dist == pytest.approx(0.0, abs=1e-9)

    def test_disjoint_discrete_support(self):
        bc, dist = bhattacharyya(np.array([1.0, 0.0]), np.array([0.0, 1.0]))
        assert bc == 0.0
        assert math.isinf(dist)

    def test_quadrature_matches_closed_form(self):
        p = GaussianSpec(0.0, 1.0)
        q = GaussianSpec(1.0, 1.0)
        _, dist = bhattacharyya(p.pdf, q.pdf, -30, 30)
        assert dist == pytest.approx(0.125, abs=1e-6)

    def test_mixed_inputs_rejected(self):
        with pytest.raises(TheoryError, match="mix"):
            bhattacharyya(GaussianSpec(0, 1).pdf, np.array([0.5, 0.5]))

    def test_symmetry(self):
        p = GaussianSpec(-1.0, 0.7)
        q = GaussianSpec(2.0, 2.0)
        _, d_pq = bhattacharyya(p.pdf, q.pdf, -30, 30)
        _, d_qp = bhattacharyya(q.pdf, p.pdf, -30, 30)
        assert d_pq == pytest.approx(d_qp, abs=1e-9)


class TestGaussianClosedForm:
    def test_reference_values(self):
        p = GaussianSpec(0.0, 1.0)
        q = GaussianSpec(1.0, 1.0)
        assert bhattacharyya_gaussian(p, q, 0.0) == pytest.approx(0.125, abs=1e-12)
        assert bhattacharyya_gaussian(p, q, 1.0) == pytest.approx(0.0625, abs=1e-12)

    def test_identical_pair_is_zero_for_all_k(self):
        p = GaussianSpec(0.7, 1.4)
        for k in (0.0, 1.0, 5.0, 50.0):
            assert bhattacharyya_gaussian(p, p, k) == 0.0

    @settings(max_examples=40, deadline=None)
    @given(st.floats(-5, 5), st.floats(-5, 5), st.floats(0.5, 3), st.floats(0.5, 3),
           st.floats(0, 10))
    def test_quadrature_agreement_across_grid(self, mu_p, mu_q, sp, sq, k):
        p = GaussianSpec(mu_p, sp)
        q = GaussianSpec(mu_q, sq)
        closed = bhattacharyya_gaussian(p, q, k)
        wp, wq = p.widened(k), q.widened(k)
        _, quad = bhattacharyya(wp.pdf, wq.pdf, *theory.gaussian_quad_domain(wp, wq))
        assert closed == pytest.approx(quad, abs=1e-6)


class TestConvergence:
    def test_reference_pair(self):
        report = verify_convergence(GaussianSpec(0, 1), GaussianSpec(1, 1),
                                    np.arange(0.0, 101.0, 1.0))
        assert report.passed
        assert report.monotone and report.final_below_tol
        assert report.distances[0] == pytest.approx(0.125, abs=1e-12)
        assert report.distances[-1] < 1e-4

    def test_identical_pair_all_zero(self):
        report = verify_convergence(GaussianSpec(0, 1), GaussianSpec(0, 1),
                                    np.arange(0.0, 11.0, 1.0), final_tol=1e-12)
        assert report.passed
        assert max(report.distances) <= 1e-15

    def test_wide_pair_monotone(self):
        report = verify_convergence(GaussianSpec(0, 1), GaussianSpec(5, 2),
                                    np.arange(0.0, 51.0, 1.0), final_tol=1.0)
        assert report.monotone

    def test_counterexample_structure(self):
        # a decreasing-then-flat curve cannot fail, so check the failure API
        # by querying an impossible final tolerance instead
        report = verify_convergence(GaussianSpec(0, 1), GaussianSpec(1, 1),
                                    np.arange(0.0, 3.0, 1.0), final_tol=1e-12)
        assert not report.final_below_tol
        assert report.counterexample is None


class TestBiasBounds:
    def test_full_flip_zeroes_lower_bound(self):
        report = eo_bias_bounds(((0.3, 0.5), (0.7, 0.5)), 1.0, (0.25, 0.25), 0.2)
        assert report.lower == 0.0

    def test_no_flip_exact_equals_upper(self):
        report = eo_bias_bounds(((0.3, 0.5), (0.7, 0.5)), 0.0, (0.25, 0.25), 0.2)
        assert report.exact == pytest.approx(report.upper, abs=1e-15)

    def test_flat_probabilities_zero_everything(self):
        report = eo_bias_bounds(((0.5, 0.5), (0.5, 0.5)), 0.5, (0.25, 0.25), 0.2)
        assert report.alpha == 0.0
        assert report.upper == 0.0 and report.lower == 0.0

    def test_exact_is_linear_decreasing_in_k(self):
        values = [eo_bias_bounds(((0.3, 0.4), (0.8, 0.9)), k, (0.3, 0.2), 0.25).exact
                  for k in (0.0, 0.25, 0.5, 0.75, 1.0)]
        diffs = np.diff(values)
        assert (diffs < 0).all()
        assert np.allclose(diffs, diffs[0], atol=1e-12)

    @settings(max_examples=60, deadline=None)
    @given(st.floats(0, 1), st.floats(0, 1), st.floats(0, 1), st.floats(0, 1),
           st.floats(0, 1), st.floats(0.05, 1), st.floats(0.05, 1), st.floats(0, 1))
    def test_containment_in_aligned_regime(self, p00, p01, d0, d1, k, m0, m1, bias):
        p10 = min(p00 + d0 * (1 - p00), 1.0)
        p11 = min(p01 + d1 * (1 - p01), 1.0)
        report = eo_bias_bounds(((p00, p01), (p10, p11)), k, (m0, m1), bias)
        assert report.details["signs_aligned"]
        assert report.lower <= report.exact + 1e-12
        assert report.exact <= report.upper + 1e-12

    def test_invalid_inputs(self):
        with pytest.raises(TheoryError):
            eo_bias_bounds(((0.5, 0.5), (0.5, 0.5)), 1.5, (0.25, 0.25), 0.2)
        with pytest.raises(TheoryError):
            eo_bias_bounds(((0.5, 0.5), (0.5, 0.5)), 0.5, (0.0, 0.25), 0.2)


@pytest.fixture(scope="module")
def fitted_policy():
    ds = synth_biased(20000, 0.25, 0.5, seed=300)
    base = fit_baseline(ds, "logreg", seed=0)
    return fit_threshold_optimizer(base, ds, "eo"), ds


class TestEmpiricalBounds:
    def test_full_flip_inclusion(self, fitted_policy):
        policy, ds = fitted_policy
        report = verify_eo_bounds_empirical(policy, ds, 1.0, n_draws=8, seed=7)
        assert report.lower == 0.0
        assert report.empirical >= report.lower
        assert report.contains_empirical is not None

    def test_moderate_flip_containment(self, fitted_policy):
        policy, ds = fitted_policy
        for k in (0.25, 0.5, 0.75):
            report = verify_eo_bounds_empirical(policy, ds, k, n_draws=8, seed=7)
            assert report.contains_empirical

    @pytest.mark.xfail(strict=True,
                       reason="printed lower bound exceeds the near-zero bias of a "
                              "genuinely eo-fitted policy at k=0; see decisions ledger")
    def test_zero_flip_containment(self, fitted_policy):
        policy, ds = fitted_policy
        report = verify_eo_bounds_empirical(policy, ds, 0.0, n_draws=8, seed=7)
        assert report.contains_empirical

    @pytest.mark.xfail(strict=True,
                       reason="alpha*M at k=0 cannot match an eo-fitted policy's "
                              "empirical bias; see decisions ledger")
    def test_zero_flip_matches_alpha_m(self, fitted_policy):
        policy, ds = fitted_policy
        report = verify_eo_bounds_empirical(policy, ds, 0.0, n_draws=8, seed=7)
        gap = abs(report.empirical - report.alpha * report.clean_bias)
        assert gap <= 3 * report.empirical_sigma


class TestMaxDemographicParity:
    def _example_policy(self):
        return ThresholdPolicy("dp", (0.2, 0.3), (0.6, 0.5), (0.3, 0.5), (0.7, 0.5))

    def test_worked_example(self):
        value = max_dp_under_noise(self._example_policy(), ScoreRange(0.0, 1.0))
        assert value == pytest.approx(0.08, abs=1e-12)

    def test_symmetric_policy_is_fair(self):
        policy = ThresholdPolicy("dp", (0.2, 0.2), (0.6, 0.6), (0.3, 0.3), (0.7, 0.7))
        assert max_dp_under_noise(policy) == 0.0

    def test_thresholds_outside_range_clamp(self):
        policy = ThresholdPolicy("dp", (-5.0, 2.0), (-1.0, 3.0), (0.5, 0.5), (0.5, 0.5))
        # group 0 thresholds below the range: always positive;
        # group 1 above: never positive
        assert max_dp_under_noise(policy, ScoreRange(0.0, 1.0)) == 1.0

    def test_monte_carlo_agreement(self):
        policy = self._example_policy()
        closed = max_dp_under_noise(policy, ScoreRange(0.0, 1.0))
        sim = simulate_max_dp(policy, ScoreRange(0.0, 1.0), 1_000_000, seed=5)
        assert abs(closed - sim) < 0.002


class TestSpecs:
    def test_gaussian_requires_positive_sigma(self):
        with pytest.raises(TheoryError):
            GaussianSpec(0.0, 0.0)

    def test_score_range_ordered(self):
        with pytest.raises(TheoryError):
            ScoreRange(1.0, 1.0)
