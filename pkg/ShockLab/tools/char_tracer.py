"""
Characteristic Tracer - 声学特征线格点追踪
以 (u, ϑ) 标记的特征线格点，沿 L 携带 μ 与 L_(Small)，计算 μ⋆、trχ、υ 与几何坐标 Jacobian

输运方程：
    dμ/dt = ½G_LL⋄X̆Ψ - ½μG_LL⋄LΨ - μG_LX⋄LΨ
    dLⁱ/dt = ½(G_LL⋄LΨ)Xⁱ - (G_LY⋄LΨ/g(Y,Y))Yⁱ + ½(G_LL⋄YΨ/g(Y,Y))Yⁱ
Y 方向导数沿格点的 ϑ 方向计算（ℓ_{t,u} 为一维曲线）。

Author: Shock Lab Team
Date: 2026-10-18
"""

import logging
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Deque, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from ShockLab.exceptions import ConfigurationError, GeometryDegenerate, NotReady, ShockCrossed
from ShockLab.tools.acoustic_geometry import (
    AcousticFrame,
    EikonalSolver,
    frame_from_lattice,
    g_contract,
    metric_jacobian,
    spatial_inner,
)
from ShockLab.tools.eos import EquationOfState
from ShockLab.tools.euler_field import FieldState, Grid, StageSnapshot
from ShockLab.tools.numerics import PeriodicSampler, periodic_derivative

logger = logging.getLogger(__name__)

# ==================== Configuration ====================
MIN_LATTICE_SIZE = 8
THETA_STENCIL_ORDER = 4
MIN_THETA_NORM = 1e-8
MIN_X_NORM = 1e-8
SAMPLED_FIELDS = ("rho", "v1", "v2", "rho1", "rho2", "v11", "v12", "v21", "v22", "rho_t", "v1_t", "v2_t")


@dataclass
class CharPoint:
    x1: float
    x2: float
    u: float
    theta: float
    mu: float
    L1_small: float
    L2_small: float


@dataclass
class LatticeFields:
    """格点携带的演化量，形状 (n_u, n_θ)"""

    x1: np.ndarray
    x2: np.ndarray
    mu: np.ndarray
    L1_small: np.ndarray
    L2_small: np.ndarray

    def axpy(self, a: float, other: "LatticeFields") -> "LatticeFields":
        return LatticeFields(*(getattr(self, n) + a * getattr(other, n) for n in self._names()))

    @staticmethod
    def _names() -> Tuple[str, ...]:
        return ("x1", "x2", "mu", "L1_small", "L2_small")


@dataclass
class CharLattice:
    u_labels: np.ndarray
    theta_labels: np.ndarray
    fields: LatticeFields
    t: float = 0.0
    U0: float = 1.0
    t_seed: float = 0.0
    gxx_defect_sum: float = 0.0
    log_upsilon_history: Deque[Tuple[float, np.ndarray]] = field(default_factory=lambda: deque(maxlen=3))

    @property
    def shape(self) -> Tuple[int, int]:
        return self.fields.mu.shape

    @property
    def gxx_drift_rate(self) -> float:
        """投影前 |g(X,X) - 1| 的累计量除以经过时间"""
        elapsed = self.t - self.t_seed
        return self.gxx_defect_sum / elapsed if elapsed > 0 else 0.0

    def point(self, j: int, k: int) -> CharPoint:
        f = self.fields
        return CharPoint(
            x1=float(f.x1[j, k]), x2=float(f.x2[j, k]), u=float(self.u_labels[j]),
            theta=float(self.theta_labels[k]), mu=float(f.mu[j, k]),
            L1_small=float(f.L1_small[j, k]), L2_small=float(f.L2_small[j, k]),
        )


@dataclass
class LatticeSample:
    """在格点位置插值得到的 Ψ、梯度与时间导数"""

    values: Dict[str, np.ndarray]

    def __getitem__(self, name: str) -> np.ndarray:
        return self.values[name]


@dataclass
class LatticeDerivatives:
    """格点上的标架与 Ψ 的几何方向导数（YΨ 用 Cartesian 梯度计算）"""

    frame: AcousticFrame
    sample: LatticeSample
    Xbr_psi: np.ndarray
    L_psi: np.ndarray
    Y_psi: np.ndarray


@dataclass
class TrChiReport:
    upsilon: np.ndarray
    trchi_a: np.ndarray
    trchi_b: np.ndarray


@dataclass
class JacobianReport:
    det: np.ndarray
    oriented_det: np.ndarray
    ratio_mu_upsilon: np.ndarray
    volume_ratio: np.ndarray


class CharTracer:
    """特征线格点的种子、右端项、RK4 推进与几何诊断"""

    def __init__(self, grid: Grid, eos: EquationOfState):
        self.grid = grid
        self.eos = eos
        self.sampler = PeriodicSampler(grid.x1_offset, grid.L1, grid.L2, grid.n1, grid.n2)

    # ==================== Sampling ====================
    def sample(self, snap: StageSnapshot, x1: np.ndarray, x2: np.ndarray) -> LatticeSample:
        s, g, r = snap.state, snap.grads, snap.rhs
        arrays = (s.rho, s.v1, s.v2, g.rho1, g.rho2, g.v11, g.v12, g.v21, g.v22, r.rho, r.v1, r.v2)
        return LatticeSample(dict(zip(SAMPLED_FIELDS, self.sampler.sample(arrays, x1, x2))))

    def sample_state(self, state: FieldState, x1: np.ndarray, x2: np.ndarray) -> Tuple[np.ndarray, ...]:
        return self.sampler.sample((state.rho, state.v1, state.v2), x1, x2)

    def theta_derivative(self, lattice: CharLattice, f: np.ndarray) -> np.ndarray:
        h = self.grid.L2 / lattice.shape[1]
        return periodic_derivative(f, h, axis=1, order=THETA_STENCIL_ORDER)

    def theta_tangent(self, lattice: CharLattice, fields: LatticeFields) -> Tuple[np.ndarray, np.ndarray]:
        """Θ = ∂x/∂ϑ；x² - ϑ 在 k 方向周期"""
        theta = lattice.theta_labels[None, :]
        T1 = self.theta_derivative(lattice, fields.x1)
        T2 = self.theta_derivative(lattice, fields.x2 - theta) + 1.0
        if np.any(np.hypot(T1, T2) < MIN_THETA_NORM):
            raise GeometryDegenerate(f"degenerate lattice tangent at t={lattice.t:.6g}")
        return T1, T2

    # ==================== Seeding ====================
    def seed_lattice(self, state0: FieldState, n_u: int, n_theta: int, U0: float = 1.0) -> CharLattice:
        """
        在 t = 0 播种格点：x = (1 - u_j, ϑ_k)，μ = 1/c_s，L_(Small) = (c_s - 1)δ^{i1} + vⁱ
        """
        if not 0.0 < U0 <= 1.0:
            raise ConfigurationError(f"U0 must lie in (0, 1], got {U0}", ["run.U0"])
        if n_u < MIN_LATTICE_SIZE or n_theta < MIN_LATTICE_SIZE:
            raise ConfigurationError("lattice needs at least 8 samples per direction", ["run.n_u", "run.n_theta"])

        u_labels = np.linspace(0.0, U0, n_u)
        theta_labels = self.grid.L2 * np.arange(n_theta) / n_theta
        x1, x2 = np.meshgrid(1.0 - u_labels, theta_labels, indexing="ij")

        rho, v1, v2 = self.sample_state(state0, x1, x2)
        cs = self.eos.sound_speed(rho)
        fields = LatticeFields(x1=x1, x2=x2, mu=1.0 / cs, L1_small=cs - 1.0 + v1, L2_small=v2.copy())

        lattice = CharLattice(
            u_labels=u_labels, theta_labels=theta_labels, fields=fields, t=state0.t, U0=U0,
            t_seed=state0.t,
        )
        self.update_volume_history(lattice, state0)
        logger.info(f"✓ Seeded characteristic lattice {n_u} x {n_theta} (U0={U0})")
        return lattice

    # ==================== Transport ====================
    def _frame(self, fields: LatticeFields, smp: LatticeSample) -> AcousticFrame:
        return frame_from_lattice(
            fields.mu, 1.0 + fields.L1_small, fields.L2_small, smp["rho"], smp["v1"], smp["v2"], self.eos
        )

    @staticmethod
    def _psi_derivatives(frame: AcousticFrame, smp: LatticeSample) -> Tuple[np.ndarray, np.ndarray]:
        """(X̆Ψ, LΨ)，形状 (..., 3)"""
        grads = ((smp["rho1"], smp["rho2"]), (smp["v11"], smp["v12"]), (smp["v21"], smp["v22"]))
        rates = (smp["rho_t"], smp["v1_t"], smp["v2_t"])
        X1, X2 = frame.X[..., 1], frame.X[..., 2]
        L1, L2 = frame.L[..., 1], frame.L[..., 2]
        Xbr = np.stack([frame.mu * (X1 * d1 + X2 * d2) for d1, d2 in grads], axis=-1)
        Lpsi = np.stack([dt + L1 * d1 + L2 * d2 for (d1, d2), dt in zip(grads, rates)], axis=-1)
        return Xbr, Lpsi

    def _y_coefficient(self, lattice: CharLattice, fields: LatticeFields, frame: AcousticFrame) -> np.ndarray:
        """Yf = c·∂_ϑf，c = (Y·Θ)/|Θ|²"""
        T1, T2 = self.theta_tangent(lattice, fields)
        return (frame.Y[..., 1] * T1 + frame.Y[..., 2] * T2) / (T1 ** 2 + T2 ** 2)

    def char_rhs(self, lattice: CharLattice, fields: LatticeFields, snap: StageSnapshot) -> LatticeFields:
        """格点输运方程右端项"""
        if np.any(fields.mu <= 0.0):
            raise ShockCrossed(f"mu <= 0 on the lattice at t={snap.state.t:.6g}")

        smp = self.sample(snap, fields.x1, fields.x2)
        frame = self._frame(fields, smp)
        Xbr, Lpsi = self._psi_derivatives(frame, smp)
        G = metric_jacobian(smp["rho"], smp["v1"], smp["v2"], self.eos)

        gll_Xbr = np.sum(frame.G_LL * Xbr, axis=-1)
        gll_L = np.sum(frame.G_LL * Lpsi, axis=-1)
        glx_L = np.sum(g_contract(G, frame.L, frame.X) * Lpsi, axis=-1)
        gly_L = np.sum(g_contract(G, frame.L, frame.Y) * Lpsi, axis=-1)
        dmu = 0.5 * gll_Xbr - 0.5 * fields.mu * gll_L - fields.mu * glx_L

        c = self._y_coefficient(lattice, fields, frame)
        Ypsi = np.stack([c * self.theta_derivative(lattice, smp[n]) for n in ("rho", "v1", "v2")], axis=-1)
        gYY = frame.g_YY
        angular = (0.5 * np.sum(frame.G_LL * Ypsi, axis=-1) - gly_L) / gYY

        dL = [0.5 * gll_L * frame.X[..., i] + angular * frame.Y[..., i] for i in (1, 2)]
        return LatticeFields(x1=frame.L[..., 1], x2=frame.L[..., 2], mu=dmu, L1_small=dL[0], L2_small=dL[1])

    def advance(
        self, lattice: CharLattice, stages: List[StageSnapshot], dt: float, state: Optional[FieldState] = None
    ) -> CharLattice:
        """
        与 Euler RK4 阶段同步的格点 RK4 推进

        Args:
            lattice: 当前格点
            stages: Euler 步的四个阶段快照
            dt: 步长
            state: 步末的场；给定时把 L 投影回 g(X,X) = 1，并累计投影前的偏差

        Returns:
            t + dt 时刻的格点
        """
        y0 = lattice.fields
        k1 = self.char_rhs(lattice, y0, stages[0])
        k2 = self.char_rhs(lattice, y0.axpy(0.5 * dt, k1), stages[1])
        k3 = self.char_rhs(lattice, y0.axpy(0.5 * dt, k2), stages[2])
        k4 = self.char_rhs(lattice, y0.axpy(dt, k3), stages[3])
        new_fields = y0.axpy(dt / 6.0, k1).axpy(dt / 3.0, k2).axpy(dt / 3.0, k3).axpy(dt / 6.0, k4)

        if np.any(new_fields.mu <= 0.0):
            raise ShockCrossed(f"mu <= 0 on the lattice at t={lattice.t + dt:.6g}")
        if state is None:
            return replace(lattice, fields=new_fields, t=lattice.t + dt)

        new_fields, defect = self.project_unit_x(new_fields, state)
        return replace(
            lattice, fields=new_fields, t=lattice.t + dt, gxx_defect_sum=lattice.gxx_defect_sum + defect
        )

    def project_unit_x(self, fields: LatticeFields, state: FieldState) -> Tuple[LatticeFields, float]:
        """
        沿 X = v - L 的方向缩放到 |X| = c_s，即 g(X,X) = 1

        Returns:
            (投影后的格点场, 投影前 max|g(X,X) - 1|)
        """
        rho, v1, v2 = self.sample_state(state, fields.x1, fields.x2)
        cs = self.eos.sound_speed(rho)
        X1 = v1 - 1.0 - fields.L1_small
        X2 = v2 - fields.L2_small
        norm = np.hypot(X1, X2)
        if np.any(norm < MIN_X_NORM):
            raise GeometryDegenerate(f"|X| vanished on the lattice at t={state.t:.6g}")
        defect = float(np.max(np.abs((norm / cs) ** 2 - 1.0)))
        scale = cs / norm
        projected = replace(fields, L1_small=v1 - 1.0 - scale * X1, L2_small=v2 - scale * X2)
        return projected, defect

    # ==================== Diagnostics ====================
    def geometric_derivatives(self, lattice: CharLattice, snap: StageSnapshot) -> LatticeDerivatives:
        fields = lattice.fields
        smp = self.sample(snap, fields.x1, fields.x2)
        frame = self._frame(fields, smp)
        Xbr, Lpsi = self._psi_derivatives(frame, smp)
        grads = ((smp["rho1"], smp["rho2"]), (smp["v11"], smp["v12"]), (smp["v21"], smp["v22"]))
        Ypsi = np.stack([frame.Y[..., 1] * d1 + frame.Y[..., 2] * d2 for d1, d2 in grads], axis=-1)
        return LatticeDerivatives(frame=frame, sample=smp, Xbr_psi=Xbr, L_psi=Lpsi, Y_psi=Ypsi)

    @staticmethod
    def mu_star(lattice: CharLattice) -> float:
        """μ⋆ = min{1, min μ}，取 u_j ≤ U₀ 的格点"""
        rows = lattice.u_labels <= lattice.U0
        return float(min(1.0, np.min(lattice.fields.mu[rows])))

    def upsilon(self, lattice: CharLattice, rho: np.ndarray) -> np.ndarray:
        """υ = sqrt(g_ab Θᵃ Θᵇ)"""
        T1, T2 = self.theta_tangent(lattice, lattice.fields)
        return np.hypot(T1, T2) / self.eos.sound_speed(rho)

    def update_volume_history(self, lattice: CharLattice, state: FieldState):
        """记录当前时刻的 ln υ，用于 trχ 路线 (a)"""
        rho, _, _ = self.sample_state(state, lattice.fields.x1, lattice.fields.x2)
        history = lattice.log_upsilon_history
        if history and history[-1][0] == lattice.t:
            history.pop()
        history.append((lattice.t, np.log(self.upsilon(lattice, rho))))

    @staticmethod
    def trchi_from_history(lattice: CharLattice) -> np.ndarray:
        """d(ln υ)/dt：三层等距时用二阶后向差分，两层时用一阶"""
        history = list(lattice.log_upsilon_history)
        if len(history) < 2:
            raise NotReady("trchi route (a) needs at least two stored steps")
        (t1, f1), (t2, f2) = history[-2], history[-1]
        if len(history) == 3:
            t0, f0 = history[0]
            if np.isclose(t1 - t0, t2 - t1, rtol=1e-9):
                return (3.0 * f2 - 4.0 * f1 + f0) / (2.0 * (t2 - t1))
        return (f2 - f1) / (t2 - t1)

    def trchi_and_upsilon(self, lattice: CharLattice, snap: StageSnapshot) -> TrChiReport:
        """
        υ 与 trχ 的两条路线

        (a) 沿轨迹 d(ln υ)/dt；(b) [g_ab(YLᵃ)Yᵇ + ½G_YY⋄LΨ]/g(Y,Y)
        """
        fields = lattice.fields
        smp = self.sample(snap, fields.x1, fields.x2)
        frame = self._frame(fields, smp)
        _, Lpsi = self._psi_derivatives(frame, smp)
        G = metric_jacobian(smp["rho"], smp["v1"], smp["v2"], self.eos)

        c = self._y_coefficient(lattice, fields, frame)
        YL = np.stack(
            [np.zeros_like(c), c * self.theta_derivative(lattice, frame.L[..., 1]),
             c * self.theta_derivative(lattice, frame.L[..., 2])],
            axis=-1,
        )
        gYY = frame.g_YY
        gyy_L = np.sum(g_contract(G, frame.Y, frame.Y) * Lpsi, axis=-1)
        trchi_b = (spatial_inner(YL, frame.Y, frame.cs) + 0.5 * gyy_L) / gYY

        try:
            trchi_a = self.trchi_from_history(lattice)
        except NotReady:
            trchi_a = np.full_like(trchi_b, np.nan)
        return TrChiReport(upsilon=self.upsilon(lattice, smp["rho"]), trchi_a=trchi_a, trchi_b=trchi_b)

    def jacobian_monitor(self, lattice: CharLattice, state: FieldState) -> JacobianReport:
        """
        det ∂(x¹, x²)/∂(u, ϑ) 与 μυ、μυc_s² 的比值

        播种时 ∂x¹/∂u = -1，故 det < 0；oriented_det = -det 在折叠前保持为正。
        """
        fields = lattice.fields
        du = lattice.u_labels
        x1_u = np.gradient(fields.x1, du, axis=0, edge_order=2)
        x2_u = np.gradient(fields.x2, du, axis=0, edge_order=2)
        x1_t, x2_t = self.theta_tangent(lattice, fields)
        det = x1_u * x2_t - x1_t * x2_u

        rho, _, _ = self.sample_state(state, fields.x1, fields.x2)
        mu_ups = fields.mu * self.upsilon(lattice, rho)
        cs2 = self.eos.sound_speed(rho) ** 2
        return JacobianReport(
            det=det, oriented_det=-det,
            ratio_mu_upsilon=np.abs(det) / mu_ups,
            volume_ratio=np.abs(det) / (mu_ups * cs2),
        )

    # ==================== Dual routes ====================
    def label_drift(self, lattice: CharLattice, u_tilde: np.ndarray) -> float:
        """max|u(x_jk) - u_j|"""
        fields = lattice.fields
        (ut,) = self.sampler.sample((u_tilde,), fields.x1, fields.x2)
        u_eval = 1.0 - fields.x1 + ut
        return float(np.max(np.abs(u_eval - lattice.u_labels[:, None])))

    def eikonal_mu_at_lattice(
        self, lattice: CharLattice, eikonal: EikonalSolver, u_tilde: np.ndarray, state: FieldState
    ) -> np.ndarray:
        """Euler 路线 μ = 1/(c_s|∇u|) 插值到格点"""
        (mu,) = self.sampler.sample((eikonal.eulerian_mu(u_tilde, state),), lattice.fields.x1, lattice.fields.x2)
        return mu

    def lattice_table(
        self, lattice: CharLattice, trchi: Optional[TrChiReport] = None, jac: Optional[JacobianReport] = None
    ) -> pd.DataFrame:
        """格点快照表"""
        f = lattice.fields
        U, TH = np.meshgrid(lattice.u_labels, lattice.theta_labels, indexing="ij")
        nan = np.full(f.mu.shape, np.nan)
        return pd.DataFrame({
            "u": U.ravel(), "theta": TH.ravel(), "x1": f.x1.ravel(), "x2": f.x2.ravel(),
            "mu": f.mu.ravel(), "L1_small": f.L1_small.ravel(), "L2_small": f.L2_small.ravel(),
            "upsilon": (trchi.upsilon if trchi else nan).ravel(),
            "trchi_a": (trchi.trchi_a if trchi else nan).ravel(),
            "trchi_b": (trchi.trchi_b if trchi else nan).ravel(),
            "det": (jac.oriented_det if jac else nan).ravel(),
        })
