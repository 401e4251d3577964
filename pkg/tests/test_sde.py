"""Solver tests: exactness cases, explosion handling, stepping properties."""

import math

import numpy as np
import pytest

from stochexp.catalog import make_scalar_spec, parse_drift
from stochexp.paths import RngStream, make_grid, refine_brownian, sample_brownian
from stochexp.sde import (
    COMPLETED,
    EXPLODED,
    STEP_LIMIT_HIT,
    PathFunction,
    SdeSpec,
    SolveConfig,
    StateFunction,
    budget_time,
    explosion_time_estimate,
    solve,
)


def scalar_spec(drift_fn, diffusion_fn, x0):
    return SdeSpec(
        dim=1,
        drift=StateFunction(drift_fn),
        diffusion=StateFunction(diffusion_fn),
        x0=np.array([x0]),
    )


ZERO = lambda x: np.zeros_like(np.asarray(x, dtype=float))
ONE = lambda x: np.ones_like(np.asarray(x, dtype=float))


class TestSolveBasics:
    def test_identity_sde_reproduces_driving_path(self):
        spec = scalar_spec(ZERO, ONE, 0.0)
        sol = solve(spec, SolveConfig(base_step=0.1), RngStream(0, 7), horizon=1.0)
        assert sol.status == COMPLETED
        assert np.array_equal(sol.states[:, 0], sol.driving.values[:, 0])

    def test_identity_sde_2d(self):
        spec = SdeSpec(
            dim=2,
            drift=StateFunction(lambda x: np.zeros(2), shape=(2,)),
            diffusion=StateFunction(lambda x: np.eye(2), shape=(2, 2)),
            x0=np.zeros(2),
        )
        sol = solve(spec, SolveConfig(base_step=0.25), RngStream(1, 1), horizon=1.0)
        assert np.array_equal(sol.states, sol.driving.values)

    def test_ode_quadratic_drift_explodes_at_one(self):
        spec = scalar_spec(lambda x: x * x, ZERO, 1.0)
        cfg = SolveConfig(base_step=1e-4, explosion_threshold=1e6, kappa=40.0)
        sol = solve(spec, cfg, RngStream(0, 0), horizon=2.0)
        assert sol.status == EXPLODED
        assert abs(sol.eta_estimate - 1.0) <= 1e-3
        assert abs(explosion_time_estimate(sol, 2.0) - 1.0) <= 1e-3

    def test_degenerate_start_beyond_threshold(self):
        spec = scalar_spec(ZERO, ONE, 5.0)
        sol = solve(spec, SolveConfig(explosion_threshold=2.0), RngStream(0, 0), horizon=1.0)
        assert sol.status == EXPLODED
        assert sol.eta_estimate == 0.0

    def test_step_limit_is_an_outcome_not_an_exception(self):
        spec = scalar_spec(lambda x: np.full_like(np.asarray(x, float), 1e9), ONE, 0.0)
        cfg = SolveConfig(base_step=0.1, kappa=1e-4, max_substeps=5, explosion_threshold=1e12)
        sol = solve(spec, cfg, RngStream(0, 0), horizon=1.0)
        assert sol.status == STEP_LIMIT_HIT

    def test_m_values_nondecreasing(self):
        for token, x0 in [("pow-plus-linear:4", 1.0), ("linear", 1.0), ("zero", 0.5)]:
            spec = make_scalar_spec(parse_drift(token), x0)
            cfg = SolveConfig(base_step=1e-2, explosion_threshold=1e4)
            sol = solve(spec, cfg, RngStream(2, 5), horizon=1.0)
            assert np.all(np.diff(sol.m_values) >= 0)
            assert sol.m_values[0] == 0.0


class TestEulerConvergence:
    def test_first_order_on_linear_ode(self):
        # drift x, diffusion 0: terminal error halves when the step halves
        errs = []
        for dt in (0.01, 0.005, 0.0025):
            spec = scalar_spec(lambda x: np.asarray(x, float) + 0.0, ZERO, 1.0)
            sol = solve(spec, SolveConfig(base_step=dt), RngStream(0, 0), horizon=1.0)
            errs.append(abs(sol.states[-1, 0] - math.e))
        for a, b in zip(errs, errs[1:]):
            assert 1.7 <= a / b <= 2.3


class TestProgressiveMeasurability:
    def test_truncating_the_driving_path_preserves_the_prefix(self):
        # path-dependent drift: half the running maximum
        drift = PathFunction(lambda times, states, t: 0.5 * np.max(np.asarray(states)), shape=(1,))
        spec = SdeSpec(dim=1, drift=drift, diffusion=StateFunction(ONE), x0=np.array([0.3]))
        grid = make_grid(1.0, 0.05)
        w_full = sample_brownian(grid, RngStream(9, 0), 1)
        cfg = SolveConfig(base_step=0.05)
        sol_full = solve(spec, cfg, RngStream(9, 1), driving=w_full)

        cut = 11  # keep times <= 0.5
        from stochexp.paths import BrownianPath, TimeGrid

        w_trunc = BrownianPath(
            grid=TimeGrid(times=grid.times[:cut], horizon=0.5),
            values=w_full.values[:cut],
            dim=1,
        )
        sol_trunc = solve(spec, cfg, RngStream(9, 1), driving=w_trunc)
        n = sol_trunc.grid.n_points
        assert np.array_equal(sol_full.states[:n], sol_trunc.states)
        assert np.array_equal(sol_full.grid.times[:n], sol_trunc.grid.times)


class TestExplosionTimeEstimate:
    def test_tail_formula(self):
        spec = scalar_spec(lambda x: x * x, ZERO, 1.0)
        cfg = SolveConfig(base_step=1e-4, explosion_threshold=1e6, kappa=40.0)
        sol = solve(spec, cfg, RngStream(0, 0), horizon=2.0)
        t_last = sol.grid.times[-1]
        x_last = abs(sol.states[-1, 0])
        expected = t_last + x_last ** (1.0 - 2.0) / (2.0 - 1.0)
        assert explosion_time_estimate(sol, 2.0) == expected

    def test_requires_exploded_path_and_superlinear_power(self):
        spec = scalar_spec(ZERO, ONE, 0.0)
        sol = solve(spec, SolveConfig(base_step=0.1), RngStream(0, 0), horizon=1.0)
        with pytest.raises(ValueError):
            explosion_time_estimate(sol, 2.0)
        spec2 = scalar_spec(lambda x: x * x, ZERO, 1.0)
        sol2 = solve(spec2, SolveConfig(base_step=1e-3), RngStream(0, 0), horizon=2.0)
        with pytest.raises(ValueError):
            explosion_time_estimate(sol2, 1.0)

    def test_estimate_stable_across_thresholds(self):
        # drift |x|^4 + x from x0=1: the extrapolated blow-up time moves by
        # less than 1% as the explosion threshold sweeps two decades
        spec = make_scalar_spec(parse_drift("pow-plus-linear:4"), 1.0)
        estimates = []
        for xmax in (1e4, 1e5, 1e6):
            cfg = SolveConfig(base_step=1e-4, explosion_threshold=xmax, kappa=40.0)
            sol = solve(spec, cfg, RngStream(21, 4), horizon=5.0)
            assert sol.status == EXPLODED
            estimates.append(explosion_time_estimate(sol, 4.0))
        spread = (max(estimates) - min(estimates)) / min(estimates)
        assert spread <= 0.01


class TestBudgetTime:
    def test_never_crossed_is_infinite(self):
        spec = scalar_spec(ZERO, ZERO, 0.0)
        sol = solve(spec, SolveConfig(base_step=0.1), RngStream(0, 0), horizon=1.0)
        assert budget_time(sol, 1.0) == math.inf

    def test_unit_integrand_crosses_linearly(self):
        spec = scalar_spec(ZERO, ZERO, 1.0)  # X stays 1, m(t) = t
        sol = solve(spec, SolveConfig(base_step=0.3), RngStream(0, 0), horizon=3.0)
        assert budget_time(sol, 2.0) == pytest.approx(2.0, abs=1e-12)

    def test_agrees_with_half_step_rerun_within_one_step(self):
        # X = W on [0, 10]: the crossing time of the budget must be stable
        # under bridge refinement of the same driving path
        dt = 0.01
        grid = make_grid(10.0, dt)
        w = sample_brownian(grid, RngStream(31, 2), 1)
        spec = scalar_spec(ZERO, ONE, 0.0)
        sol = solve(spec, SolveConfig(base_step=dt), RngStream(31, 3), driving=w)
        fine = refine_brownian(w, make_grid(10.0, dt / 2), RngStream(31, 4))
        sol_half = solve(spec, SolveConfig(base_step=dt / 2), RngStream(31, 5), driving=fine)
        t1 = budget_time(sol, 1.0)
        t2 = budget_time(sol_half, 1.0)
        assert abs(t1 - t2) <= dt

    def test_budget_must_be_positive(self):
        spec = scalar_spec(ZERO, ONE, 0.0)
        sol = solve(spec, SolveConfig(base_step=0.5), RngStream(0, 0), horizon=1.0)
        with pytest.raises(ValueError):
            budget_time(sol, 0.0)
