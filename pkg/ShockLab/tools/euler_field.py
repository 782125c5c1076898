"""
Euler Field Solver - 可压缩 Euler 方程场求解器
周期网格上的 (ϱ, v¹, v²) 演化：六阶中心差分 + 经典 RK4 + 谱滤波

    ∂_t ϱ  = -v·∇ϱ - ∇·v
    ∂_t vⁱ = -v·∇vⁱ - c_s²(ϱ) ∂_i ϱ

同时提供比涡度 ϖ = (∂₁v² - ∂₂v¹)e^{-ϱ}、梯度范数、质量监测与检查点读写。

Author: Shock Lab Team
Date: 2026-10-18
"""

import logging
from dataclasses import dataclass, replace
from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np

from ShockLab.exceptions import CFLViolation, ConfigurationError, NumericFailure, RegimeViolation
from ShockLab.tools.eos import EquationOfState
from ShockLab.tools.numerics import SpectralFilter, periodic_derivative

logger = logging.getLogger(__name__)

# ==================== Configuration ====================
RHO_GUARD = 0.5
SPEED_GUARD = 3.0
CFL_SLACK = 1e-12
CHECKPOINT_HEADER = 6


@dataclass(frozen=True)
class Grid:
    """周期盒子 [x1_offset, x1_offset + L1) × [0, L2)"""

    n1: int
    n2: int
    L1: float
    L2: float = 1.0
    x1_offset: float = 0.0

    def __post_init__(self):
        bad = []
        if self.n1 < 16 or self.n1 % 2:
            bad.append("grid.n1")
        if self.n2 < 16 or self.n2 % 2:
            bad.append("grid.n2")
        if not self.L1 > 0:
            bad.append("grid.L1")
        if self.L2 != 1.0:
            bad.append("grid.L2")
        if bad:
            raise ConfigurationError("grid sizes must be even and >= 16, L1 > 0 and L2 = 1", bad)

    @property
    def h1(self) -> float:
        return self.L1 / self.n1

    @property
    def h2(self) -> float:
        return self.L2 / self.n2

    @property
    def x1(self) -> np.ndarray:
        return self.x1_offset + self.h1 * np.arange(self.n1)

    @property
    def x2(self) -> np.ndarray:
        return self.h2 * np.arange(self.n2)

    def mesh(self) -> Tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x1, self.x2, indexing="ij")


@dataclass
class FieldState:
    """某一时刻的网格场，数组形状均为 (n1, n2)"""

    t: float
    rho: np.ndarray
    v1: np.ndarray
    v2: np.ndarray
    grid: Grid

    def copy(self) -> "FieldState":
        return replace(self, rho=self.rho.copy(), v1=self.v1.copy(), v2=self.v2.copy())

    def check_finite(self):
        for name in ("rho", "v1", "v2"):
            arr = getattr(self, name)
            bad = ~np.isfinite(arr)
            if np.any(bad):
                raise NumericFailure(name, tuple(np.argwhere(bad)[0]), self.t)


@dataclass
class FieldGradients:
    """空间一阶导数；vij 表示 ∂_j vⁱ"""

    rho1: np.ndarray
    rho2: np.ndarray
    v11: np.ndarray
    v12: np.ndarray
    v21: np.ndarray
    v22: np.ndarray


@dataclass
class FieldRHS:
    """时间导数 ∂_t(ϱ, v¹, v²)"""

    rho: np.ndarray
    v1: np.ndarray
    v2: np.ndarray


@dataclass
class StageSnapshot:
    """RK4 的一个阶段：状态、梯度与右端项，供程函与特征格点复用"""

    state: FieldState
    grads: FieldGradients
    rhs: FieldRHS


@dataclass
class GradientNorms:
    """网格上的梯度最大范数；max_grad_v 为 |∇v| 的 Frobenius 范数"""

    max_grad_rho: float
    max_grad_v1: float
    max_grad_v2: float
    max_grad_v: float
    max_grad_vort: float
    lipschitz_vort: float


class EulerSolver:
    """周期网格上的 Euler 方程求解器"""

    def __init__(
        self,
        grid: Grid,
        eos: EquationOfState,
        stencil_order: int = 6,
        filter_strength: float = 1e-2,
        cfl: float = 0.4,
        workers: int = 1,
    ):
        if stencil_order not in (2, 4, 6):
            raise ConfigurationError(f"unsupported stencil order {stencil_order}", ["run.stencil_order"])
        if not 0.0 < cfl <= 1.0:
            raise ConfigurationError(f"cfl must lie in (0, 1], got {cfl}", ["run.cfl"])

        self.grid = grid
        self.eos = eos
        self.stencil_order = stencil_order
        self.cfl = cfl
        self.filter = SpectralFilter(grid.n1, grid.n2, filter_strength, workers=workers)

    # ==================== Derivatives ====================
    def d1(self, f: np.ndarray) -> np.ndarray:
        return periodic_derivative(f, self.grid.h1, axis=0, order=self.stencil_order)

    def d2(self, f: np.ndarray) -> np.ndarray:
        return periodic_derivative(f, self.grid.h2, axis=1, order=self.stencil_order)

    def gradients(self, state: FieldState) -> FieldGradients:
        return FieldGradients(
            rho1=self.d1(state.rho),
            rho2=self.d2(state.rho),
            v11=self.d1(state.v1),
            v12=self.d2(state.v1),
            v21=self.d1(state.v2),
            v22=self.d2(state.v2),
        )

    # ==================== Right-hand side ====================
    def euler_rhs(self, state: FieldState, grads: Optional[FieldGradients] = None) -> FieldRHS:
        """Euler 方程右端项"""
        state.check_finite()
        g = grads if grads is not None else self.gradients(state)
        cs2 = self.eos.sound_speed(state.rho) ** 2

        return FieldRHS(
            rho=-(state.v1 * g.rho1 + state.v2 * g.rho2) - (g.v11 + g.v22),
            v1=-(state.v1 * g.v11 + state.v2 * g.v12) - cs2 * g.rho1,
            v2=-(state.v1 * g.v21 + state.v2 * g.v22) - cs2 * g.rho2,
        )

    def snapshot(self, state: FieldState) -> StageSnapshot:
        grads = self.gradients(state)
        return StageSnapshot(state=state, grads=grads, rhs=self.euler_rhs(state, grads))

    # ==================== Time stepping ====================
    def max_speed(self, state: FieldState) -> float:
        """最大特征速度 max(|v| + c_s)"""
        speed = np.hypot(state.v1, state.v2) + self.eos.sound_speed(state.rho)
        return float(np.max(speed))

    def stable_dt(self, state: FieldState) -> float:
        return self.cfl * min(self.grid.h1, self.grid.h2) / self.max_speed(state)

    def check_regime(self, state: FieldState):
        """小幅值区域检查：max|ϱ| ≤ 0.5 且 λ_max ≤ 3"""
        rho_max = float(np.max(np.abs(state.rho)))
        if rho_max > RHO_GUARD:
            raise RegimeViolation(f"max|rho|={rho_max:.4g} exceeds {RHO_GUARD} at t={state.t:.6g}")
        lam = self.max_speed(state)
        if lam > SPEED_GUARD:
            raise RegimeViolation(f"max characteristic speed {lam:.4g} exceeds {SPEED_GUARD} at t={state.t:.6g}")

    def _shifted(self, base: FieldState, rhs: FieldRHS, dt: float) -> FieldState:
        return FieldState(
            t=base.t + dt,
            rho=base.rho + dt * rhs.rho,
            v1=base.v1 + dt * rhs.v1,
            v2=base.v2 + dt * rhs.v2,
            grid=base.grid,
        )

    def step_with_stages(self, state: FieldState, dt: float) -> Tuple[FieldState, List[StageSnapshot]]:
        """
        经典 RK4 单步，返回新状态与四个阶段快照

        Args:
            state: 当前状态
            dt: 时间步长（不得超过 CFL 上限）

        Returns:
            (新状态, [S1, S2, S3, S4])
        """
        limit = self.stable_dt(state)
        if dt > limit * (1.0 + CFL_SLACK):
            raise CFLViolation(f"dt={dt:.6g} exceeds the CFL bound {limit:.6g}", ["run.cfl"])

        s1 = self.snapshot(state)
        s2 = self.snapshot(self._shifted(state, s1.rhs, 0.5 * dt))
        s3 = self.snapshot(self._shifted(state, s2.rhs, 0.5 * dt))
        s4 = self.snapshot(self._shifted(state, s3.rhs, dt))
        stages = [s1, s2, s3, s4]

        def combine(name: str) -> np.ndarray:
            k = [getattr(s.rhs, name) for s in stages]
            raw = getattr(state, name) + dt / 6.0 * (k[0] + 2.0 * k[1] + 2.0 * k[2] + k[3])
            return self.filter.apply(raw)

        new_state = FieldState(
            t=state.t + dt,
            rho=combine("rho"),
            v1=combine("v1"),
            v2=combine("v2"),
            grid=state.grid,
        )
        new_state.check_finite()
        self.check_regime(new_state)
        return new_state, stages

    def step(self, state: FieldState, dt: float) -> FieldState:
        return self.step_with_stages(state, dt)[0]

    # ==================== Vorticity ====================
    def specific_vorticity(self, state: FieldState, grads: Optional[FieldGradients] = None) -> np.ndarray:
        """ϖ = (∂₁v² - ∂₂v¹) e^{-ϱ}"""
        g = grads if grads is not None else self.gradients(state)
        return (g.v21 - g.v12) * np.exp(-state.rho)

    def vorticity_time_derivative(self, snap: StageSnapshot) -> np.ndarray:
        """∂_t ϖ 由 Euler 右端项经链式法则得到"""
        vort = self.specific_vorticity(snap.state, snap.grads)
        curl_rate = self.d1(snap.rhs.v2) - self.d2(snap.rhs.v1)
        return curl_rate * np.exp(-snap.state.rho) - vort * snap.rhs.rho

    def vorticity_transport_residual(self, state: FieldState, snap: Optional[StageSnapshot] = None) -> np.ndarray:
        """Bϖ = ∂_tϖ + v·∇ϖ，连续情形恒为零"""
        snap = snap if snap is not None else self.snapshot(state)
        vort = self.specific_vorticity(state, snap.grads)
        return self.vorticity_time_derivative(snap) + state.v1 * self.d1(vort) + state.v2 * self.d2(vort)

    def gradient_norms(self, state: FieldState, grads: Optional[FieldGradients] = None) -> GradientNorms:
        g = grads if grads is not None else self.gradients(state)
        vort = self.specific_vorticity(state, g)
        vort1, vort2 = self.d1(vort), self.d2(vort)
        grad_v = np.sqrt(g.v11 ** 2 + g.v12 ** 2 + g.v21 ** 2 + g.v22 ** 2)
        lip = float(np.max(np.hypot(vort1, vort2)))
        return GradientNorms(
            max_grad_rho=float(np.max(np.hypot(g.rho1, g.rho2))),
            max_grad_v1=float(np.max(np.hypot(g.v11, g.v12))),
            max_grad_v2=float(np.max(np.hypot(g.v21, g.v22))),
            max_grad_v=float(np.max(grad_v)),
            max_grad_vort=lip,
            lipschitz_vort=lip,
        )

    def total_mass(self, state: FieldState) -> float:
        """∫ e^ϱ dx（相对背景密度）"""
        return float(np.sum(np.exp(state.rho)) * self.grid.h1 * self.grid.h2)


# ==================== Checkpoints ====================
def save_checkpoint(path: Union[str, Path], state: FieldState):
    """小端 float64：头部 (t, n1, n2, L1, L2, x1_offset)，随后 ϱ、v¹、v²"""
    g = state.grid
    header = np.array([state.t, g.n1, g.n2, g.L1, g.L2, g.x1_offset], dtype="<f8")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        header.tofile(f)
        for arr in (state.rho, state.v1, state.v2):
            np.ascontiguousarray(arr, dtype="<f8").tofile(f)
    logger.info(f"✓ Checkpoint written: {path} (t={state.t:.6g})")


def load_checkpoint(path: Union[str, Path]) -> FieldState:
    raw = np.fromfile(Path(path), dtype="<f8")
    if raw.size < CHECKPOINT_HEADER:
        raise ValueError(f"truncated checkpoint: {path}")
    t, n1, n2, L1, L2, x1_offset = raw[:CHECKPOINT_HEADER]
    grid = Grid(n1=int(n1), n2=int(n2), L1=float(L1), L2=float(L2), x1_offset=float(x1_offset))
    size = grid.n1 * grid.n2
    body = raw[CHECKPOINT_HEADER:]
    if body.size != 3 * size:
        raise ValueError(f"checkpoint body has {body.size} values, expected {3 * size}")
    rho, v1, v2 = (body[i * size:(i + 1) * size].reshape(grid.n1, grid.n2) for i in range(3))
    return FieldState(t=float(t), rho=rho.copy(), v1=v1.copy(), v2=v2.copy(), grid=grid)
