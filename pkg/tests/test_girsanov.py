"""Drift shift, density weights, shifted paths and weighted estimation."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from stochexp.girsanov import (
    drift_shift_transform,
    exponential_tilt_weight,
    qn_weight,
    shifted_brownian,
    weighted_expectation,
)
from stochexp.paths import BrownianPath, RngStream, TimeGrid, make_grid, sample_brownian
from stochexp.sde import PathFunction, SdeSpec, StateFunction


def manual_path(values, horizon=None):
    values = np.asarray(values, dtype=float)
    times = np.linspace(0.0, horizon or 1.0, values.shape[0])
    grid = TimeGrid(times=times, horizon=float(times[-1]))
    return BrownianPath(grid=grid, values=values, dim=1 if values.ndim == 1 else values.shape[1])


class TestDriftShift:
    def test_quartic_scalar_shift(self):
        spec = SdeSpec(
            dim=1,
            drift=StateFunction(lambda x: np.abs(x) ** 4),
            diffusion=StateFunction(lambda x: np.ones_like(np.asarray(x, float))),
            x0=np.array([0.0]),
        )
        shifted = drift_shift_transform(spec)
        for x in np.linspace(-3, 3, 41):
            assert shifted.drift.fn(x) == pytest.approx(abs(x) ** 4 + x, rel=1e-15)
        assert shifted.x0 == pytest.approx(spec.x0)

    def test_zero_diffusion_leaves_drift_alone(self):
        spec = SdeSpec(
            dim=1,
            drift=StateFunction(lambda x: 2.0 * np.asarray(x, float)),
            diffusion=StateFunction(lambda x: np.zeros_like(np.asarray(x, float))),
            x0=np.array([1.0]),
        )
        shifted = drift_shift_transform(spec)
        for x in np.linspace(-2, 2, 17):
            assert shifted.drift.fn(x) == pytest.approx(2 * x)

    def test_identity_diffusion_2d(self):
        spec = SdeSpec(
            dim=2,
            drift=StateFunction(lambda x: np.zeros(2), shape=(2,)),
            diffusion=StateFunction(lambda x: np.eye(2), shape=(2, 2)),
            x0=np.zeros(2),
        )
        shifted = drift_shift_transform(spec)
        for _ in range(10):
            x = np.random.default_rng(0).normal(size=2)
            assert np.allclose(shifted.drift.fn(x), x)

    def test_path_functional_coefficients_supported(self):
        mu = PathFunction(lambda times, states, t: np.array([t]), shape=(1,))
        sig = PathFunction(lambda times, states, t: np.array([[2.0]]), shape=(1, 1))
        spec = SdeSpec(dim=1, drift=mu, diffusion=sig, x0=np.array([0.5]))
        shifted = drift_shift_transform(spec)
        out = shifted.drift.evaluate([0.0], [np.array([3.0])], 0.25)
        assert np.allclose(out, [0.25 + 2.0 * 3.0])


class TestTiltWeights:
    def test_zero_tilt_is_unit_weight(self):
        w = sample_brownian(make_grid(1.0, 0.5), RngStream(0, 0), 1)
        assert exponential_tilt_weight(w, 0.0, 1.0).weight == 1.0

    def test_weight_at_its_own_mean_path(self):
        lam, horizon = 0.7, 2.0
        path = manual_path([0.0, lam * horizon], horizon=horizon)
        tw = exponential_tilt_weight(path, lam, horizon)
        assert tw.weight == pytest.approx(math.exp(lam**2 * horizon / 2), rel=1e-14)

    def test_horizon_off_grid_rejected(self):
        w = sample_brownian(make_grid(1.0, 0.5), RngStream(0, 0), 1)
        with pytest.raises(ValueError):
            exponential_tilt_weight(w, 1.0, 0.7)

    def test_weight_mean_is_one(self):
        lam, n = 1.0, 100_000
        grid = make_grid(1.0, 1.0)
        weights = np.empty(n)
        for i in range(n):
            w = sample_brownian(grid, RngStream(404, i), 1)
            weights[i] = exponential_tilt_weight(w, lam, 1.0, path_index=i).weight
        se = weights.std() / math.sqrt(n)
        assert abs(weights.mean() - 1.0) <= 3 * se

    def test_tilt_equals_qn_weight_for_constant_integrand(self):
        lam, horizon = 1.3, 1.0
        grid = make_grid(horizon, 0.1)
        for i in range(25):
            w = sample_brownian(grid, RngStream(505, i), 1)
            x = np.full(grid.n_points, lam)
            tilt = exponential_tilt_weight(w, lam, horizon)
            qn = qn_weight(x, w, budget=lam * lam * horizon + 1.0, horizon=horizon)
            assert qn.weight == pytest.approx(tilt.weight, rel=1e-12)


class TestQnWeight:
    def test_zero_integrand_unit_weight(self):
        w = sample_brownian(make_grid(1.0, 0.25), RngStream(0, 3), 1)
        for budget in (0.1, 1.0, 10.0):
            assert qn_weight(np.zeros(w.grid.n_points), w, budget, 1.0).weight == 1.0

    def test_unit_integrand_inactive_budget(self):
        w = sample_brownian(make_grid(1.0, 0.25), RngStream(1, 3), 1)
        x = np.ones(w.grid.n_points)
        expected = math.exp(w.values[-1, 0] - 0.5)
        assert qn_weight(x, w, budget=2.0, horizon=1.0).weight == pytest.approx(
            expected, rel=1e-12
        )

    def test_truncated_weight_mean_is_one(self):
        # Novikov after truncation: weighted mean of 1 is 1 within 3 SE
        n, dt = 100_000, 0.02
        grid = make_grid(1.0, dt)
        weights = np.empty(n)
        for i in range(n):
            w = sample_brownian(grid, RngStream(606, i), 1)
            weights[i] = qn_weight(w.values[:, 0], w, budget=1.0, horizon=1.0).weight
        est = weighted_expectation(np.ones(n), weights)
        assert abs(est.mean - 1.0) <= 3 * est.std_error


class TestShiftedBrownian:
    def test_zero_integrand_is_identity(self):
        w = sample_brownian(make_grid(1.0, 0.2), RngStream(2, 2), 1)
        out = shifted_brownian(w, np.zeros_like(w.values))
        assert np.array_equal(out.values, w.values)

    def test_unit_integrand_linear_shift(self):
        w = sample_brownian(make_grid(1.0, 1.0), RngStream(2, 3), 1)
        out = shifted_brownian(w, np.ones_like(w.values))
        assert out.values[1, 0] == pytest.approx(w.values[1, 0] - 1.0, rel=1e-14)

    def test_grid_mismatch_rejected(self):
        w = sample_brownian(make_grid(1.0, 0.5), RngStream(2, 4), 1)
        with pytest.raises(ValueError):
            shifted_brownian(w, np.zeros((5, 1)))

    def test_weighted_moments_under_tilt(self):
        # under the tilted density, W(t) - lam*t has Brownian moments
        lam, t_mid, horizon, n = 1.0, 0.5, 1.0, 50_000
        grid = make_grid(horizon, 0.5)
        w_mid = np.empty(n)
        weights = np.empty(n)
        for i in range(n):
            w = sample_brownian(grid, RngStream(707, i), 1)
            weights[i] = exponential_tilt_weight(w, lam, horizon).weight
            w_mid[i] = w.value_at(t_mid)[0]
        mean_est = weighted_expectation(w_mid, weights)
        assert abs(mean_est.mean - lam * t_mid) <= 3 * mean_est.std_error
        var_est = weighted_expectation((w_mid - lam * t_mid) ** 2, weights)
        assert abs(var_est.mean - t_mid) <= 3 * var_est.std_error

    def test_weighted_moments_under_qn_weight(self):
        # X = 1 with inactive budget: the shifted path is Brownian under Q_N
        n, horizon = 50_000, 1.0
        grid = make_grid(horizon, 0.25)
        t_mid = 0.5
        vals = np.empty(n)
        weights = np.empty(n)
        for i in range(n):
            w = sample_brownian(grid, RngStream(808, i), 1)
            x = np.ones(grid.n_points)
            weights[i] = qn_weight(x, w, budget=horizon + 1, horizon=horizon).weight
            vals[i] = shifted_brownian(w, x).value_at(t_mid)[0]
        mean_est = weighted_expectation(vals, weights)
        var_est = weighted_expectation(vals * vals, weights)
        assert abs(mean_est.mean) <= 3 * mean_est.std_error
        assert abs(var_est.mean - t_mid) <= 3 * var_est.std_error


class TestWeightedExpectation:
    def test_unit_weights_reduce_to_plain_mean(self):
        samples = np.array([1.0, 2.0, 3.0])
        est = weighted_expectation(samples, np.ones(3))
        assert est.mean == pytest.approx(2.0)
        assert est.std_error == pytest.approx(math.sqrt(2.0 / 3.0) / math.sqrt(3))
        assert est.ci_low == pytest.approx(est.mean - 1.96 * est.std_error)
        assert est.ci_high == pytest.approx(est.mean + 1.96 * est.std_error)

    def test_constant_samples_return_weight_mean(self):
        weights = np.array([0.5, 1.5, 2.0, 0.0])
        est = weighted_expectation(np.ones(4), weights)
        assert est.mean == pytest.approx(weights.mean())

    @pytest.mark.parametrize(
        "samples,weights",
        [([1.0], [1.0]), ([1.0, 2.0], [1.0]), ([1.0, 2.0], [1.0, -0.5])],
    )
    def test_invalid_inputs_rejected(self, samples, weights):
        with pytest.raises(ValueError):
            weighted_expectation(np.asarray(samples), np.asarray(weights))

    @given(
        samples=arrays(
            np.float64,
            st.integers(2, 40),
            elements=st.floats(-100, 100, allow_nan=False),
        )
    )
    @settings(max_examples=60, deadline=None)
    def test_matches_direct_formulas_with_unit_weights(self, samples):
        est = weighted_expectation(samples, np.ones_like(samples))
        assert est.mean == pytest.approx(float(samples.mean()), rel=1e-12, abs=1e-12)
        assert est.std_error == pytest.approx(
            float(samples.std(ddof=0)) / math.sqrt(samples.size), rel=1e-12, abs=1e-12
        )
