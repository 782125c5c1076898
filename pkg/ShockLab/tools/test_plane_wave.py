"""
Plane Simple Wave Tests - 平面简单波测试
初始数据构造、Riemann 不变量、精确解与特征相交时间

Author: Shock Lab Team
Date: 2026-10-18
"""

import math

import numpy as np
import pytest

from ShockLab.exceptions import ConfigurationError, NoShockSignal, PostShockError
from ShockLab.tools.eos import EquationOfState
from ShockLab.tools.euler_field import EulerSolver, Grid
from ShockLab.tools.plane_wave import (
    DataRecipe,
    build_initial_data,
    characteristic_speed,
    crossing_time,
    exact_mu_simple_wave,
    exact_simple_wave,
    riemann_invariants,
    vorticity_ramp,
)

# ==================== Test Configuration ====================
AMPLITUDE = 0.01
POLY = EquationOfState.polytropic(3.0)
CHAP = EquationOfState.chaplygin()
PURE_SINE = DataRecipe(amplitude=AMPLITUDE, window="none")
T_STAR_SINE = 1.0 / (4.0 * np.pi * AMPLITUDE)


@pytest.fixture
def grid():
    return Grid(n1=256, n2=16, L1=4.0, x1_offset=-1.0)


class TestInitialData:
    def test_zero_amplitude_is_constant(self, grid):
        state, report = build_initial_data(DataRecipe(amplitude=0.0), POLY, grid)
        for arr in (state.rho, state.v1, state.v2):
            assert np.max(np.abs(arr)) == 0.0
        assert report.delta_star == 0.0

    def test_polytropic_density(self, grid):
        state, report = build_initial_data(DataRecipe(amplitude=AMPLITUDE), POLY, grid)
        np.testing.assert_allclose(state.rho[:, 0], np.log1p(state.v1[:, 0]), atol=1e-14)
        assert np.all(state.v1[:, 0] == state.v1[:, -1])
        assert report.epsilon == pytest.approx(AMPLITUDE, rel=1e-2)

    def test_window_is_flat_inside(self):
        recipe = DataRecipe(amplitude=AMPLITUDE, window="smoothstep5", window_width=0.1)
        x = np.linspace(0.1, 0.9, 33)
        np.testing.assert_allclose(recipe.v1_profile(x), AMPLITUDE * np.sin(2 * np.pi * x), atol=1e-15)
        assert recipe.v1_profile(np.array([-0.5, 1.5])).tolist() == [0.0, 0.0]

    def test_profile_derivative_is_analytic(self):
        for recipe in (DataRecipe(window="smoothstep5"), DataRecipe(window="cinf"), DataRecipe(profile="bump")):
            x = np.linspace(0.02, 0.98, 25)
            h = 1e-6
            fd = (recipe.v1_profile(x + h) - recipe.v1_profile(x - h)) / (2 * h)
            np.testing.assert_allclose(recipe.v1_profile_deriv(x), fd, atol=1e-8)

    def test_vorticity_ramp(self):
        grid = Grid(n1=512, n2=16, L1=10.0, x1_offset=-3.0)
        recipe = DataRecipe(
            amplitude=AMPLITUDE, vorticity_lambda=1e-3, vorticity_profile="tanh_ramp", ramp=(-1.0, 3.0)
        )
        state, _ = build_initial_data(recipe, POLY, grid)
        vort = EulerSolver(grid, POLY).specific_vorticity(state)[:, 0]
        on_ramp = (grid.x1 > -0.5) & (grid.x1 < 2.5)
        assert np.all(vort[on_ramp] > 0.0)
        assert abs(np.mean(vorticity_ramp(recipe, grid))) <= 1e-14

    def test_ramp_needs_clearance(self):
        grid = Grid(n1=256, n2=16, L1=6.0, x1_offset=-2.0)
        recipe = DataRecipe(vorticity_lambda=1e-3, vorticity_profile="tanh_ramp", ramp=(-1.0, 3.0))
        with pytest.raises(ConfigurationError):
            vorticity_ramp(recipe, grid)

    def test_window_must_contain_support(self):
        with pytest.raises(ConfigurationError):
            build_initial_data(PURE_SINE, POLY, Grid(n1=64, n2=16, L1=0.5, x1_offset=0.2))

    def test_invalid_recipe_lists_keys(self):
        with pytest.raises(ConfigurationError) as err:
            DataRecipe(profile="square", window_width=0.8)
        assert err.value.key_paths == ["data.profile", "data.window_width"]


class TestRiemannInvariants:
    def test_constant_state(self, grid):
        state, _ = build_initial_data(DataRecipe(amplitude=0.0), POLY, grid)
        r_minus, r_plus = riemann_invariants(state, POLY)
        assert np.max(np.abs(r_minus)) == 0.0 and np.max(np.abs(r_plus)) == 0.0

    @pytest.mark.parametrize("eos", [POLY, CHAP], ids=["polytropic", "chaplygin"])
    def test_simple_wave_data(self, grid, eos):
        state, _ = build_initial_data(DataRecipe(amplitude=AMPLITUDE), eos, grid)
        r_minus, r_plus = riemann_invariants(state, eos)
        assert np.max(np.abs(r_minus)) <= 1e-14
        np.testing.assert_allclose(r_plus, 2.0 * state.v1, atol=1e-14)


class TestExactSolution:
    def test_initial_time_returns_data(self):
        x = np.linspace(-0.2, 1.2, 57)
        rho, v1 = exact_simple_wave(PURE_SINE, POLY, x, 0.0)
        np.testing.assert_array_equal(v1, PURE_SINE.v1_profile(x))
        np.testing.assert_allclose(rho, np.log1p(v1), atol=1e-15)

    def test_burgers_speed_for_gamma3(self):
        x0 = np.linspace(0.0, 1.0, 41)
        np.testing.assert_allclose(characteristic_speed(PURE_SINE, POLY, x0), 2 * PURE_SINE.v1_profile(x0) + 1, atol=1e-14)

    def test_characteristic_substitution(self):
        t = 4.0
        x0 = np.linspace(0.05, 0.95, 19)
        x = x0 + characteristic_speed(PURE_SINE, POLY, x0) * t
        _, v1 = exact_simple_wave(PURE_SINE, POLY, x, t)
        np.testing.assert_allclose(v1, PURE_SINE.v1_profile(x0), atol=1e-12)

    def test_post_shock_rejected(self):
        with pytest.raises(PostShockError):
            exact_simple_wave(PURE_SINE, POLY, np.array([8.5]), 8.0)

    def test_exact_mu_at_initial_time(self):
        x0 = np.linspace(0.0, 1.0, 21)
        rho0 = np.log1p(PURE_SINE.v1_profile(x0))
        np.testing.assert_allclose(exact_mu_simple_wave(PURE_SINE, POLY, x0, 0.0), np.exp(-rho0), atol=1e-15)

    def test_exact_mu_vanishes_at_crossing(self):
        mu = exact_mu_simple_wave(PURE_SINE, POLY, np.array([0.5]), T_STAR_SINE)
        assert float(mu[0]) == pytest.approx(0.0, abs=1e-12)


class TestCrossingTime:
    def test_pure_sine(self):
        assert crossing_time(PURE_SINE, POLY) == pytest.approx(T_STAR_SINE, rel=1e-9)
        assert T_STAR_SINE == pytest.approx(7.9577, abs=1e-4)

    def test_constant_state(self):
        with pytest.raises(NoShockSignal):
            crossing_time(DataRecipe(amplitude=0.0), POLY)

    def test_chaplygin_never_crosses(self):
        with pytest.raises(NoShockSignal):
            crossing_time(PURE_SINE, CHAP)


class TestDeltaStar:
    def test_polytropic_matches_crossing_rate(self):
        grid = Grid(n1=1024, n2=16, L1=4.0, x1_offset=-1.0)
        _, report = build_initial_data(PURE_SINE, POLY, grid)
        assert report.delta_star == pytest.approx(4 * np.pi * AMPLITUDE, rel=1e-4)
        assert report.delta_star == pytest.approx(1.0 / T_STAR_SINE, rel=1e-4)

    def test_chaplygin_is_second_order(self, grid):
        _, report = build_initial_data(PURE_SINE, CHAP, grid)
        assert report.delta_star <= 10 * AMPLITUDE ** 2


@pytest.mark.slow
def test_simulated_wave_tracks_exact_solution():
    grid = Grid(n1=512, n2=16, L1=4.0, x1_offset=-1.0)
    recipe = DataRecipe(amplitude=AMPLITUDE, profile="bump")
    state, _ = build_initial_data(recipe, POLY, grid)
    solver = EulerSolver(grid, POLY)
    t_end = 1.0
    n_steps = math.ceil(t_end / (0.9 * solver.stable_dt(state)))
    dt = t_end / n_steps
    for _ in range(n_steps):
        state = solver.step(state, dt)

    rho_ex, v1_ex = exact_simple_wave(recipe, POLY, grid.x1, state.t)
    assert np.max(np.abs(state.v1[:, 0] - v1_ex)) <= 1e-5
    assert np.max(np.abs(state.rho[:, 0] - rho_ex)) <= 1e-5
    r_minus, _ = riemann_invariants(state, POLY)
    assert np.max(np.abs(r_minus)) <= 1e-5
    assert np.max(np.abs(state.v2)) <= 1e-14
