"""
Euler Field Solver Tests - 场求解器测试
常数态、定常剪切流与正弦速度场的解析检验

Author: Shock Lab Team
Date: 2026-10-18
"""

import numpy as np
import pytest

from ShockLab.exceptions import CFLViolation, ConfigurationError, NumericFailure, RegimeViolation
from ShockLab.tools.eos import EquationOfState
from ShockLab.tools.euler_field import EulerSolver, FieldState, Grid, load_checkpoint, save_checkpoint

# ==================== Test Configuration ====================
N1 = 256
N2 = 16
AMPLITUDE = 0.01
T_ORDER = 0.2


@pytest.fixture
def grid():
    return Grid(n1=N1, n2=N2, L1=1.0)


@pytest.fixture
def solver(grid):
    return EulerSolver(grid, EquationOfState.polytropic(3.0))


def make_state(grid, rho=0.0, v1=0.0, v2=0.0, t=0.0):
    shape = (grid.n1, grid.n2)
    as_field = lambda f: np.broadcast_to(np.asarray(f, dtype=float), shape).copy()
    return FieldState(t=t, rho=as_field(rho), v1=as_field(v1), v2=as_field(v2), grid=grid)


def shear_state(grid):
    X1, _ = grid.mesh()
    return make_state(grid, v2=AMPLITUDE * np.sin(2 * np.pi * X1))


class TestGrid:
    def test_odd_size_rejected(self):
        with pytest.raises(ConfigurationError) as err:
            Grid(n1=17, n2=16, L1=1.0)
        assert err.value.key_paths == ["grid.n1"]

    def test_torus_length_is_fixed(self):
        with pytest.raises(ConfigurationError) as err:
            Grid(n1=32, n2=16, L1=4.0, L2=2.0)
        assert err.value.key_paths == ["grid.L2"]

    def test_coordinates(self):
        g = Grid(n1=32, n2=16, L1=4.0, x1_offset=-1.0)
        assert g.h1 == pytest.approx(0.125)
        assert g.x1[0] == -1.0 and g.x1[-1] == pytest.approx(2.875)


class TestEulerRHS:
    def test_constant_state(self, solver, grid):
        rhs = solver.euler_rhs(make_state(grid))
        for arr in (rhs.rho, rhs.v1, rhs.v2):
            assert np.max(np.abs(arr)) == 0.0

    def test_sine_velocity(self, solver, grid):
        X1, _ = grid.mesh()
        rhs = solver.euler_rhs(make_state(grid, v1=AMPLITUDE * np.sin(2 * np.pi * X1)))
        assert rhs.rho[0, 0] == pytest.approx(-2 * np.pi * AMPLITUDE, rel=1e-9)
        assert rhs.v1[0, 0] == pytest.approx(0.0, abs=1e-15)
        assert np.max(np.abs(rhs.v2)) == 0.0

    def test_steady_shear(self, solver, grid):
        rhs = solver.euler_rhs(shear_state(grid))
        for arr in (rhs.rho, rhs.v1, rhs.v2):
            assert np.max(np.abs(arr)) <= 1e-14

    def test_non_finite_reports_location(self, solver, grid):
        state = make_state(grid)
        state.v2[3, 5] = np.nan
        with pytest.raises(NumericFailure) as err:
            solver.euler_rhs(state)
        assert err.value.field == "v2"
        assert err.value.index == (3, 5)


class TestStep:
    def test_constant_state_fixed(self, solver, grid):
        state = make_state(grid, rho=0.05, v1=0.02)
        new = solver.step(state, 1e-3)
        assert new.t == pytest.approx(1e-3)
        np.testing.assert_allclose(new.rho, state.rho, atol=1e-14)
        np.testing.assert_allclose(new.v1, state.v1, atol=1e-14)

    def test_steady_shear_preserved(self, solver, grid):
        state = shear_state(grid)
        start = state.copy()
        for _ in range(1000):
            state = solver.step(state, 1e-3)
        assert state.t == pytest.approx(1.0)
        for name in ("rho", "v1", "v2"):
            assert np.max(np.abs(getattr(state, name) - getattr(start, name))) <= 1e-10

    def test_stages_are_exposed(self, solver, grid):
        _, stages = solver.step_with_stages(shear_state(grid), 1e-3)
        assert [s.state.t for s in stages] == pytest.approx([0.0, 5e-4, 5e-4, 1e-3])

    def test_cfl_violation(self, solver, grid):
        with pytest.raises(CFLViolation):
            solver.step(make_state(grid), 1.0)

    def test_regime_violation(self, solver, grid):
        with pytest.raises(RegimeViolation):
            solver.step(make_state(grid, rho=0.6), 1e-4)

    def test_rk4_temporal_order(self):
        grid = Grid(n1=64, n2=16, L1=1.0)
        solver = EulerSolver(grid, EquationOfState.polytropic(3.0), filter_strength=0.0, cfl=1.0)
        X1, _ = grid.mesh()
        start = make_state(grid, v1=AMPLITUDE * np.sin(8 * np.pi * X1))

        def advance(dt):
            state = start
            for _ in range(round(T_ORDER / dt)):
                state = solver.step(state, dt)
            return state.v1

        reference = advance(0.01 / 8)
        errors = [np.max(np.abs(advance(dt) - reference)) for dt in (0.01, 0.005)]
        assert np.log2(errors[0] / errors[1]) >= 3.5

    @pytest.mark.slow
    def test_mass_conservation(self):
        grid = Grid(n1=512, n2=16, L1=1.0)
        solver = EulerSolver(grid, EquationOfState.polytropic(3.0))
        X1, _ = grid.mesh()
        v1 = AMPLITUDE * np.sin(2 * np.pi * X1)
        state = make_state(grid, rho=np.log1p(v1), v1=v1)
        mass0 = solver.total_mass(state)
        n_steps = 400
        dt = 0.9 * solver.stable_dt(state)
        for _ in range(n_steps):
            state = solver.step(state, dt)
        assert abs(solver.total_mass(state) - mass0) / (n_steps * dt) <= 1e-8


class TestVorticity:
    def test_plane_symmetric_is_irrotational(self, solver, grid):
        X1, _ = grid.mesh()
        state = make_state(grid, rho=0.01 * np.sin(2 * np.pi * X1), v1=0.01 * np.sin(2 * np.pi * X1))
        assert np.max(np.abs(solver.specific_vorticity(state))) == 0.0
        assert np.max(np.abs(solver.vorticity_transport_residual(state))) <= 1e-14

    def test_vorticity_formula(self, solver, grid):
        X1, _ = grid.mesh()
        state = make_state(grid, rho=0.1, v2=np.sin(2 * np.pi * X1))
        expected = 2 * np.pi * np.cos(2 * np.pi * X1) * np.exp(-0.1)
        np.testing.assert_allclose(solver.specific_vorticity(state), expected, atol=1e-9)

    def test_shear_transport_residual(self, solver, grid):
        assert np.max(np.abs(solver.vorticity_transport_residual(shear_state(grid)))) <= 1e-12

    def test_gradient_norms(self, solver, grid):
        assert solver.gradient_norms(make_state(grid)).max_grad_v == 0.0
        X1, _ = grid.mesh()
        norms = solver.gradient_norms(make_state(grid, v1=AMPLITUDE * np.sin(2 * np.pi * X1)))
        assert norms.max_grad_v == pytest.approx(2 * np.pi * AMPLITUDE, rel=1e-8)
        assert norms.max_grad_v1 == pytest.approx(2 * np.pi * AMPLITUDE, rel=1e-8)
        assert norms.max_grad_v2 == 0.0
        shear = solver.gradient_norms(shear_state(grid))
        assert shear.max_grad_v1 == 0.0
        assert shear.max_grad_v2 == pytest.approx(2 * np.pi * AMPLITUDE, rel=1e-8)
        assert shear.lipschitz_vort == pytest.approx((2 * np.pi) ** 2 * AMPLITUDE, rel=1e-8)


def test_checkpoint_restores_state(tmp_path, grid):
    X1, X2 = grid.mesh()
    state = make_state(grid, rho=0.01 * np.cos(2 * np.pi * X2), v1=0.02 * np.sin(2 * np.pi * X1), t=0.75)
    path = tmp_path / "state.bin"
    save_checkpoint(path, state)
    loaded = load_checkpoint(path)
    assert loaded.t == 0.75 and loaded.grid == grid
    np.testing.assert_array_equal(loaded.rho, state.rho)
    np.testing.assert_array_equal(loaded.v1, state.v1)
