"""
Shock Diagnostics Tests - 激波诊断测试
记录表、波动残差缓冲、涡度源标架分解、爆破指标与 μ⋆ 拟合

Author: Shock Lab Team
Date: 2026-10-18
"""

import numpy as np
import pandas as pd
import pytest

from ShockLab.exceptions import NotReady
from ShockLab.tools.acoustic_geometry import frame_from_eikonal
from ShockLab.tools.char_tracer import CharTracer
from ShockLab.tools.diagnostics import (
    CSV_COLUMNS,
    EXTRA_COLUMNS,
    DiagnosticsRecord,
    WaveResidualBuffer,
    blowup_indicator,
    blowup_reference,
    mu_linearity_fit,
    null_form_cross_term,
    regularity_hierarchy,
    vorticity_source_frame_check,
)
from ShockLab.tools.eos import EquationOfState
from ShockLab.tools.euler_field import EulerSolver, FieldState, Grid
from ShockLab.tools.plane_wave import DataRecipe, build_initial_data

# ==================== Test Configuration ====================
AMPLITUDE = 0.01
POLY = EquationOfState.polytropic(3.0)
DT = 0.01


@pytest.fixture
def grid():
    return Grid(n1=256, n2=16, L1=4.0, x1_offset=-1.0)


@pytest.fixture
def solver(grid):
    return EulerSolver(grid, POLY)


def make_state(grid, t=0.0, v2=None):
    zeros = np.zeros((grid.n1, grid.n2))
    return FieldState(t, zeros.copy(), zeros.copy(), zeros.copy() if v2 is None else v2, grid=grid)


def shear(grid):
    X1, _ = grid.mesh()
    return AMPLITUDE * np.sin(2 * np.pi * X1)


class TestDiagnosticsRecord:
    def test_times_must_be_monotone(self):
        record = DiagnosticsRecord()
        record.append(t=1.0, mu_star=0.9)
        with pytest.raises(ValueError):
            record.append(t=0.5, mu_star=0.8)
        assert len(record) == 1

    def test_frame_has_fixed_columns(self):
        record = DiagnosticsRecord(delta_star=0.1)
        record.append(t=0.0, mu_star=1.0, max_grad_v=0.2)
        df = record.to_frame()
        assert list(df.columns) == CSV_COLUMNS + EXTRA_COLUMNS
        assert df["mu_star"].iloc[0] == 1.0
        assert np.isnan(df["max_trchi"].iloc[0])


class TestWaveResidualBuffer:
    def test_not_ready_until_five_levels(self, solver, grid):
        buffer = WaveResidualBuffer(solver)
        for n in range(4):
            buffer.push(make_state(grid, t=n * DT))
        assert not buffer.ready
        with pytest.raises(NotReady):
            buffer.covariant_wave_residual("rho")
        assert np.isnan(buffer.residual_norms()["res_wave_v1"])

    def test_uneven_levels_are_not_ready(self, solver, grid):
        buffer = WaveResidualBuffer(solver)
        for t in (0.0, 0.01, 0.02, 0.04, 0.05):
            buffer.push(make_state(grid, t=t))
        assert not buffer.ready

    def test_constant_state_has_zero_residual(self, solver, grid):
        buffer = WaveResidualBuffer(solver)
        for n in range(5):
            buffer.push(make_state(grid, t=n * DT))
        norms = buffer.residual_norms()
        assert norms["res_time"] == pytest.approx(2 * DT)
        for key in ("res_wave_rho", "res_wave_v1", "res_wave_v2", "res_transport"):
            assert norms[key] == 0.0

    def test_steady_shear_satisfies_wave_system(self, solver, grid):
        buffer = WaveResidualBuffer(solver)
        for n in range(5):
            buffer.push(make_state(grid, t=n * DT, v2=shear(grid)))
        for component in ("rho", "v1", "v2"):
            assert np.max(np.abs(buffer.covariant_wave_residual(component))) <= 1e-12
        assert np.max(np.abs(buffer.transport_residual())) <= 1e-12

    @pytest.mark.slow
    def test_wave_with_vorticity_converges(self):
        recipe = DataRecipe(
            amplitude=AMPLITUDE, window_width=0.25, vorticity_lambda=1e-3, vorticity_profile="tanh_ramp",
            ramp=(0.35, 0.65), ramp_width=0.08,
        )

        def residuals(n1):
            grid = Grid(n1=n1, n2=16, L1=2.0, x1_offset=-0.5)
            solver = EulerSolver(grid, POLY)
            state, _ = build_initial_data(recipe, POLY, grid)
            dt = 0.25 * grid.h1
            buffer = WaveResidualBuffer(solver)
            buffer.push(state)
            for _ in range(4):
                state = solver.step(state, dt)
                buffer.push(state)
            return buffer.residual_norms()

        coarse, fine = residuals(256), residuals(512)
        for key in ("res_wave_rho", "res_wave_v1", "res_wave_v2", "res_transport"):
            assert fine[key] > 0.0
            assert coarse[key] / fine[key] >= 8.0, key

    def test_unknown_component(self, solver):
        with pytest.raises(ValueError):
            WaveResidualBuffer(solver).covariant_wave_residual("p")


class TestNullForms:
    def test_cross_term_vanishes_in_plane_symmetry(self, solver, grid):
        state, _ = build_initial_data(DataRecipe(amplitude=AMPLITUDE), POLY, grid)
        assert np.max(np.abs(null_form_cross_term(solver, state))) == 0.0

    def test_vorticity_source_decomposition(self, solver, grid):
        state = make_state(grid, v2=shear(grid))
        snap = solver.snapshot(state)
        ones = np.ones_like(state.rho)
        frame = frame_from_eikonal(-ones, 0.0 * ones, state.rho, state.v1, state.v2, POLY)
        residual = vorticity_source_frame_check(solver, snap, frame)
        assert residual.shape == (grid.n1, grid.n2, 2)
        assert np.max(np.abs(residual)) <= 1e-12


class TestBlowupIndicator:
    def test_reference_for_gamma3(self):
        assert blowup_reference(0.16, POLY) == pytest.approx(0.01)

    def test_reference_undefined_when_factor_vanishes(self):
        assert np.isnan(blowup_reference(0.1, EquationOfState.chaplygin()))

    def test_constant_state(self, solver, grid):
        state = make_state(grid)
        tracer = CharTracer(grid, POLY)
        lattice = tracer.seed_lattice(state, 33, 8)
        derivs = tracer.geometric_derivatives(lattice, solver.snapshot(state))
        ind = blowup_indicator(lattice, derivs, 0.1, POLY)
        assert ind.mu_star == 1.0 and not ind.late_phase
        assert ind.max_Xv1_mu == 0.0 and ind.neighborhood_min == 0.0
        assert ind.reference == pytest.approx(0.1 / 16)

    def test_simple_wave_hierarchy(self, solver, grid):
        state, report = build_initial_data(DataRecipe(amplitude=AMPLITUDE), POLY, grid)
        tracer = CharTracer(grid, POLY)
        lattice = tracer.seed_lattice(state, 33, 8)
        derivs = tracer.geometric_derivatives(lattice, solver.snapshot(state))
        ind = blowup_indicator(lattice, derivs, report.delta_star, POLY)
        assert ind.max_Xv1_mu >= 2 * np.pi * AMPLITUDE * (1 - 1e-3)

        levels = regularity_hierarchy(derivs)
        assert levels["max_Xbrv2"] <= 1e-12
        assert levels["max_Xbr_rho_minus_v1"] <= 2e-3
        assert levels["max_tangential"] <= 1e-4
        assert levels["max_Xbr_v1"] >= 10 * levels["max_Xbr_rho_minus_v1"]


class TestMuLinearityFit:
    def test_linear_record(self):
        t = np.arange(0.0, 0.97, 0.01)
        fit = mu_linearity_fit(pd.DataFrame({"t": t, "mu_star": 1.0 - t}))
        assert fit.kappa == pytest.approx(1.0, rel=1e-9)
        assert fit.T_obs == pytest.approx(1.0, rel=1e-9)
        assert fit.max_residual <= 1e-12
        assert fit.n_samples >= 8

    def test_mu_never_small(self):
        t = np.linspace(0.0, 1.0, 21)
        with pytest.raises(NotReady):
            mu_linearity_fit(pd.DataFrame({"t": t, "mu_star": 1.0 - 0.5 * t}))

    def test_too_few_samples(self):
        t = np.array([0.0, 0.85, 0.9, 0.95])
        with pytest.raises(NotReady):
            mu_linearity_fit(pd.DataFrame({"t": t, "mu_star": 1.0 - t}))

    def test_rising_tail(self):
        t = np.linspace(0.0, 1.0, 51)
        mu = np.where(t <= 0.6, 1.0 - 1.5 * t, 0.1 + (t - 0.6))
        with pytest.raises(NotReady):
            mu_linearity_fit(pd.DataFrame({"t": t, "mu_star": mu}))
