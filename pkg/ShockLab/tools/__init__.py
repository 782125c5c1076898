"""
Numerical Tools - 数值工具
状态方程、Euler 场求解器、声学几何、特征线格点、平面简单波与诊断
"""

from ShockLab.tools.acoustic_geometry import (
    AcousticFrame,
    AcousticMetric,
    EikonalSolver,
    frame_from_eikonal,
    frame_from_lattice,
    metric_at,
)
from ShockLab.tools.char_tracer import CharLattice, CharTracer
from ShockLab.tools.diagnostics import DiagnosticsRecord, WaveResidualBuffer, mu_linearity_fit
from ShockLab.tools.eos import EOSKind, EquationOfState, build_eos
from ShockLab.tools.euler_field import EulerSolver, FieldState, Grid, load_checkpoint, save_checkpoint
from ShockLab.tools.plane_wave import (
    DataRecipe,
    build_initial_data,
    crossing_time,
    delta_star,
    exact_mu_simple_wave,
    exact_simple_wave,
)

__all__ = [
    "AcousticFrame",
    "AcousticMetric",
    "EikonalSolver",
    "frame_from_eikonal",
    "frame_from_lattice",
    "metric_at",
    "CharLattice",
    "CharTracer",
    "DiagnosticsRecord",
    "WaveResidualBuffer",
    "mu_linearity_fit",
    "EOSKind",
    "EquationOfState",
    "build_eos",
    "EulerSolver",
    "FieldState",
    "Grid",
    "load_checkpoint",
    "save_checkpoint",
    "DataRecipe",
    "build_initial_data",
    "crossing_time",
    "delta_star",
    "exact_mu_simple_wave",
    "exact_simple_wave",
]
