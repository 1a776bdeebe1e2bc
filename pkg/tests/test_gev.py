"""Extreme-value law: CDF/quantile, jitter, ML fitting, run-count estimates."""

import math

import numpy as np
import pytest
from scipy import stats as sps

from qevt.errors import DegenerateSamplesError, InsufficientSamplesError
from qevt.gev import (
    GevParams,
    _nll_and_grad,
    estimate_shots,
    fit_gev_minima,
    gev_cdf,
    gev_nll,
    gev_pdf,
    gev_quantile,
    jitter,
    required_runs,
    success_probability,
)


def draw_maxima(mu, sigma, xi, size, seed):
    """Independent sample oracle (scipy uses c = -xi)."""
    return sps.genextreme.rvs(c=-xi, loc=mu, scale=sigma, size=size, random_state=seed)


class TestCdf:
    def test_gumbel_at_location(self):
        assert gev_cdf(GevParams(0, 1, 0), 0.0) == pytest.approx(math.exp(-1), abs=1e-12)

    def test_frechet_value(self):
        assert gev_cdf(GevParams(0, 1, 1), 1.0) == pytest.approx(math.exp(-0.5), abs=1e-12)

    def test_bounded_support_above_endpoint(self):
        params = GevParams(0, 1, -0.5)       # upper endpoint at mu + sigma/|xi| = 2
        assert gev_cdf(params, 2.5) == 1.0
        assert gev_cdf(params, 1.9) < 1.0

    def test_frechet_below_lower_endpoint(self):
        params = GevParams(0, 1, 0.5)        # lower endpoint at -2
        assert gev_cdf(params, -2.5) == 0.0

    def test_monotone_and_limits(self):
        params = GevParams(1.5, 2.0, 0.2)
        zs = np.linspace(-10, 40, 300)
        values = gev_cdf(params, zs)
        assert np.all(np.diff(values) >= -1e-15)
        assert values[0] == pytest.approx(0.0, abs=1e-6)
        assert values[-1] == pytest.approx(1.0, abs=1e-3)

    def test_matches_scipy(self):
        for mu, sigma, xi in [(0, 1, 0.3), (2, 0.5, -0.2), (-1, 3, 0.0)]:
            params = GevParams(mu, sigma, xi)
            zs = np.linspace(mu - 2 * sigma, mu + 5 * sigma, 50)
            ours = gev_cdf(params, zs)
            theirs = sps.genextreme.cdf(zs, c=-xi, loc=mu, scale=sigma)
            assert np.allclose(ours, theirs, atol=1e-10)

    def test_invalid_sigma(self):
        with pytest.raises(ValueError):
            GevParams(0, 0, 0)


class TestQuantile:
    def test_gumbel_inverse(self):
        assert gev_quantile(GevParams(0, 1, 0), math.exp(-1)) == pytest.approx(0.0, abs=1e-12)

    def test_round_trip(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            params = GevParams(
                mu=float(rng.normal(0, 5)),
                sigma=float(rng.uniform(0.1, 4)),
                xi=float(rng.uniform(-0.9, 0.9)),
            )
            q = float(rng.uniform(0.01, 0.99))
            assert gev_cdf(params, gev_quantile(params, q)) == pytest.approx(q, abs=1e-9)

    def test_monotone_in_q(self):
        params = GevParams(0, 1, -0.3)
        qs = np.linspace(0.01, 0.99, 50)
        values = [gev_quantile(params, q) for q in qs]
        assert np.all(np.diff(values) > 0)

    def test_rejects_boundary(self):
        with pytest.raises(ValueError):
            gev_quantile(GevParams(0, 1, 0), 0.0)
        with pytest.raises(ValueError):
            gev_quantile(GevParams(0, 1, 0), 1.0)


class TestJitter:
    def test_delta_is_smallest_nonzero_gap(self):
        smoothed = jitter([-3.0, -2.5, -2.5, -1.0], seed=1)
        assert smoothed.delta == pytest.approx(0.5)

    def test_identical_values_degenerate(self):
        with pytest.raises(DegenerateSamplesError):
            jitter([5.0, 5.0, 5.0], seed=0)

    def test_perturbation_bounded_by_half_delta(self):
        original = np.array([-3.0, -2.5, -2.5, -1.0])
        smoothed = jitter(original, seed=7)
        assert np.all(np.abs(smoothed.values - original) < 0.25)

    def test_deterministic(self):
        values = [1.0, 2.0, 2.5, 4.0]
        assert np.array_equal(jitter(values, seed=3).values, jitter(values, seed=3).values)


class TestFit:
    def test_gumbel_recovery(self):
        maxima = draw_maxima(0.0, 1.0, 0.0, 10_000, seed=1)
        fitted = fit_gev_minima(jitter(-maxima, seed=2))
        assert fitted.mu == pytest.approx(0.0, abs=0.05)
        assert fitted.sigma == pytest.approx(1.0, abs=0.05)
        assert fitted.xi == pytest.approx(0.0, abs=0.05)

    def test_frechet_recovery(self):
        maxima = draw_maxima(0.0, 1.0, 0.2, 10_000, seed=3)
        fitted = fit_gev_minima(jitter(-maxima, seed=4))
        assert fitted.xi == pytest.approx(0.2, abs=0.05)

    def test_location_equivariance(self):
        maxima = draw_maxima(1.0, 2.0, 0.1, 3_000, seed=5)
        base = fit_gev_minima(jitter(-maxima, seed=6))
        shifted = fit_gev_minima(jitter(-maxima - 7.5, seed=6))
        # shifting minima by -7.5 shifts the negated-domain location by +7.5
        assert shifted.mu - base.mu == pytest.approx(7.5, abs=1e-3)
        assert shifted.sigma == pytest.approx(base.sigma, abs=1e-3)
        assert shifted.xi == pytest.approx(base.xi, abs=1e-3)

    def test_requires_twenty_samples(self):
        with pytest.raises(InsufficientSamplesError):
            fit_gev_minima(jitter(np.arange(10.0), seed=0))

    def test_recovery_improves_with_samples(self):
        errors_small, errors_large = [], []
        for seed in range(20):
            for size, sink in ((100, errors_small), (10_000, errors_large)):
                maxima = draw_maxima(0.0, 1.0, 0.1, size, seed=seed)
                fitted = fit_gev_minima(jitter(-maxima, seed=seed + 1))
                sink.append(abs(fitted.xi - 0.1) + abs(fitted.mu) + abs(fitted.sigma - 1.0))
        assert np.median(errors_large) < np.median(errors_small)

    def test_nll_matches_scipy(self):
        maxima = draw_maxima(0.5, 1.5, 0.15, 500, seed=8)
        params = GevParams(0.5, 1.5, 0.15)
        ours = gev_nll(params, maxima)
        theirs = -sps.genextreme.logpdf(maxima, c=-0.15, loc=0.5, scale=1.5).sum()
        assert ours == pytest.approx(theirs, rel=1e-10)

    def test_gradient_matches_finite_differences(self):
        y = draw_maxima(1.0, 2.0, 0.2, 400, seed=7)
        for theta in ([0.8, 1.9, 0.15], [1.1, 2.2, 0.4], [1.0, 2.0, 1e-9]):
            theta = np.array(theta, dtype=float)
            _, grad = _nll_and_grad(theta, y)
            for k in range(3):
                h = 1e-6 * max(1.0, abs(theta[k]))
                tp, tm = theta.copy(), theta.copy()
                tp[k] += h
                tm[k] -= h
                fd = (_nll_and_grad(tp, y)[0] - _nll_and_grad(tm, y)[0]) / (2 * h)
                # skip comparisons that straddle the Gumbel switch
                if k == 2 and abs(theta[2]) < 1e-5:
                    continue
                assert grad[k] == pytest.approx(fd, rel=1e-4, abs=1e-4)


class TestSuccessProbability:
    def test_far_above_mass(self):
        params = GevParams(0, 1, 0.1)
        assert success_probability(params, 1e6) == pytest.approx(1.0, abs=1e-9)

    def test_below_bounded_tail_is_exactly_zero(self):
        params = GevParams(0, 1, -0.5)
        # negated-domain upper endpoint 2 -> minima cannot fall below -2
        assert success_probability(params, -3.0) == 0.0

    def test_matches_monte_carlo(self):
        mu, sigma, xi = 1.0, 2.0, 0.15
        params = GevParams(mu, sigma, xi)
        minima = -draw_maxima(mu, sigma, xi, 100_000, seed=9)
        for y_ideal in (-3.0, -1.0, 0.5):
            empirical = float((minima <= y_ideal).mean())
            assert success_probability(params, y_ideal) == pytest.approx(empirical, abs=0.01)

    def test_negation_coherence_after_fit(self):
        mu, sigma, xi = 0.5, 1.5, -0.1
        fit_minima = -draw_maxima(mu, sigma, xi, 30_000, seed=10)
        held_out = -draw_maxima(mu, sigma, xi, 100_000, seed=11)
        fitted = fit_gev_minima(jitter(fit_minima, seed=12))
        for y_ideal in (-2.0, -0.5, 0.3):
            empirical = float((held_out <= y_ideal).mean())
            assert success_probability(fitted, y_ideal) == pytest.approx(empirical, abs=0.01)


class TestRequiredRuns:
    def test_closed_form_examples(self):
        assert required_runs(0.5, 0.95) == 5
        assert required_runs(0.05, 0.95) == 59

    def test_zero_probability_sentinel(self):
        assert required_runs(0.0, 0.95) == math.inf
        assert required_runs(0.0, 0.5) == math.inf

    def test_certain_success(self):
        assert required_runs(1.0, 0.95) == 1

    def test_high_probability_floors_at_one(self):
        assert required_runs(0.9999, 0.5) == 1

    def test_alpha_validation(self):
        with pytest.raises(ValueError):
            required_runs(0.5, 0.0)
        with pytest.raises(ValueError):
            required_runs(0.5, 1.0)

    def test_monotone_in_probability_and_alpha(self):
        probs = [0.01, 0.05, 0.2, 0.5, 0.9]
        runs = [required_runs(p, 0.95) for p in probs]
        assert runs == sorted(runs, reverse=True)
        alphas = [0.5, 0.8, 0.9, 0.95, 0.99]
        runs = [required_runs(0.1, a) for a in alphas]
        assert runs == sorted(runs)


class TestEstimateShots:
    def test_composition(self):
        # p = 0.5 exactly: y_ideal at the negated-domain median
        params = GevParams(0, 1, 0)
        y_ideal = -gev_quantile(params, 0.5)
        est = estimate_shots(params, y_ideal, 0.95, 500)
        assert est.n_evt == 5
        assert est.total_shots == 2500

    def test_alpha_ordering(self):
        params = GevParams(0, 1, 0.1)
        lo = estimate_shots(params, -0.5, 0.90, 100)
        hi = estimate_shots(params, -0.5, 0.95, 100)
        assert lo.n_evt <= hi.n_evt

    def test_infinite_sentinel_propagates(self):
        params = GevParams(0, 1, -0.5)
        est = estimate_shots(params, -5.0, 0.95, 200)
        assert est.success_prob == 0.0
        assert est.n_evt == math.inf
        assert est.total_shots == math.inf


def test_pdf_integrates_to_cdf():
    params = GevParams(0.3, 1.2, -0.2)
    zs = np.linspace(-3, 6, 20_000)
    pdf = gev_pdf(params, zs)
    integral = np.trapezoid(pdf, zs)
    assert integral == pytest.approx(1.0, abs=1e-3)
