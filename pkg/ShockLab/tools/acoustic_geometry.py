"""
Acoustic Geometry - 声学几何
声学度规 g 及其逆、Ψ-Jacobian G、程函方程与逐点标架 (μ, L, X, Y, y, G_LL)

约定：
- 时空指标 α ∈ {0, 1, 2}，x⁰ = t；Ψ = (ϱ, v¹, v²) 的指标 ι ∈ {0, 1, 2}
- 所有函数对任意前导形状向量化，分量放在最后的轴上
- 程函方程采用 Hamilton–Jacobi 形式 Bu = c_s|∇u|（正分支），
  由 g⁻¹ = -B⊗B + c_s² Σ ∂_a⊗∂_a 与 ∂_t u > 0 推出
- u = (1 - x¹) + ũ，ũ 为周期部分

Author: Shock Lab Team
Date: 2026-10-18
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Tuple

import numpy as np

from ShockLab.exceptions import DegenerateGradientError, GeometryDegenerate
from ShockLab.tools.eos import EquationOfState
from ShockLab.tools.euler_field import EulerSolver, FieldState, StageSnapshot

logger = logging.getLogger(__name__)

# ==================== Configuration ====================
MIN_GRADIENT = 1e-8


@dataclass
class AcousticMetric:
    g: np.ndarray  # (..., 3, 3)
    g_inv: np.ndarray  # (..., 3, 3)
    det_g: np.ndarray  # (...)


@dataclass
class AcousticFrame:
    """逐点标架；向量以时空分量 (…, 3) 存储，X⁰ = Y⁰ = 0，L⁰ = 1"""

    mu: np.ndarray
    L: np.ndarray
    X: np.ndarray
    Y: np.ndarray
    y: np.ndarray
    G_LL: np.ndarray
    cs: np.ndarray

    @property
    def L_small(self) -> np.ndarray:
        out = self.L[..., 1:].copy()
        out[..., 0] -= 1.0
        return out

    @property
    def g_YY(self) -> np.ndarray:
        return spatial_inner(self.Y, self.Y, self.cs)


# ==================== Metric ====================
def metric_at(rho: np.ndarray, v1: np.ndarray, v2: np.ndarray, eos: EquationOfState) -> AcousticMetric:
    """
    声学度规及其逆

    g₀₀ = -1 + c_s⁻²|v|²，g₀ᵢ = -c_s⁻²vⁱ，gᵢⱼ = c_s⁻²δᵢⱼ
    g⁻¹ = -B⊗B + c_s² Σ ∂_a⊗∂_a，B = (1, v¹, v²)
    """
    rho, v1, v2 = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (rho, v1, v2)))
    cs = eos.sound_speed(rho)
    inv_cs2 = cs ** -2
    shape = rho.shape

    g = np.zeros(shape + (3, 3))
    g[..., 0, 0] = -1.0 + inv_cs2 * (v1 ** 2 + v2 ** 2)
    g[..., 0, 1] = g[..., 1, 0] = -inv_cs2 * v1
    g[..., 0, 2] = g[..., 2, 0] = -inv_cs2 * v2
    g[..., 1, 1] = inv_cs2
    g[..., 2, 2] = inv_cs2

    B = np.stack([np.ones(shape), v1, v2], axis=-1)
    g_inv = -B[..., :, None] * B[..., None, :]
    g_inv[..., 1, 1] += cs ** 2
    g_inv[..., 2, 2] += cs ** 2

    return AcousticMetric(g=g, g_inv=g_inv, det_g=-cs ** -4)


def metric_jacobian(rho: np.ndarray, v1: np.ndarray, v2: np.ndarray, eos: EquationOfState) -> np.ndarray:
    """
    G^ι_{αβ} = ∂g_{αβ}/∂Ψ_ι，形状 (..., 3, 3, 3)，下标顺序 [ι, α, β]
    """
    rho, v1, v2 = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (rho, v1, v2)))
    cs = eos.sound_speed(rho)
    dcs = eos.sound_speed_deriv(rho)
    inv_cs2 = cs ** -2
    d_inv_cs2 = -2.0 * cs ** -3 * dcs

    G = np.zeros(rho.shape + (3, 3, 3))
    # ∂/∂ϱ
    G[..., 0, 0, 0] = d_inv_cs2 * (v1 ** 2 + v2 ** 2)
    G[..., 0, 0, 1] = G[..., 0, 1, 0] = -d_inv_cs2 * v1
    G[..., 0, 0, 2] = G[..., 0, 2, 0] = -d_inv_cs2 * v2
    G[..., 0, 1, 1] = d_inv_cs2
    G[..., 0, 2, 2] = d_inv_cs2
    # ∂/∂vᵏ
    for k, vk in ((1, v1), (2, v2)):
        G[..., k, 0, 0] = 2.0 * inv_cs2 * vk
        G[..., k, 0, k] = G[..., k, k, 0] = -inv_cs2
    return G


def g_contract(G: np.ndarray, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """G^ι_{αβ}AᵅBᵝ，返回 (..., 3)"""
    return np.einsum("...iab,...a,...b->...i", G, A, B)


def spatial_inner(A: np.ndarray, B: np.ndarray, cs: np.ndarray) -> np.ndarray:
    """两个 Σ_t-切向量的 g 内积：c_s⁻²(A¹B¹ + A²B²)"""
    return (A[..., 1] * B[..., 1] + A[..., 2] * B[..., 2]) / cs ** 2


def metric_inner(g: np.ndarray, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    return np.einsum("...ab,...a,...b->...", g, A, B)


# ==================== Frame ====================
def _frame(mu: np.ndarray, L1: np.ndarray, L2: np.ndarray, rho, v1, v2, eos: EquationOfState) -> AcousticFrame:
    cs = eos.sound_speed(rho)
    ones = np.ones_like(mu)
    X1, X2 = v1 - L1, v2 - L2
    L = np.stack([ones, L1, L2], axis=-1)
    X = np.stack([np.zeros_like(mu), X1, X2], axis=-1)

    y = X2 / cs ** 2
    Y = np.stack([np.zeros_like(mu), -y * X1, 1.0 - y * X2], axis=-1)

    frame = AcousticFrame(mu=mu, L=L, X=X, Y=Y, y=y, G_LL=np.zeros_like(L), cs=cs)
    frame.G_LL = g_ll_components(frame, rho, eos)
    return frame


def frame_from_eikonal(du1: np.ndarray, du2: np.ndarray, rho, v1, v2, eos: EquationOfState) -> AcousticFrame:
    """
    由 ∇u 构造标架

    μ = 1/(c_s|∇u|)，Lⁱ = vⁱ - μc_s²∂ᵢu，Xⁱ = μc_s²∂ᵢu，
    y = c_s⁻²X²，Yⁱ = δ₂ⁱ - yXⁱ
    """
    du1, du2, rho, v1, v2 = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (du1, du2, rho, v1, v2)))
    grad = np.hypot(du1, du2)
    if np.any(grad < MIN_GRADIENT):
        raise DegenerateGradientError(f"|grad u| = {float(np.min(grad)):.3g} below {MIN_GRADIENT}")

    cs = eos.sound_speed(rho)
    mu = 1.0 / (cs * grad)
    scale = mu * cs ** 2
    return _frame(mu, v1 - scale * du1, v2 - scale * du2, rho, v1, v2, eos)


def frame_from_lattice(mu, L1, L2, rho, v1, v2, eos: EquationOfState) -> AcousticFrame:
    """由特征格点携带的 (μ, Lⁱ) 与插值得到的 Ψ 构造标架，X = v - L"""
    return _frame(*np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (mu, L1, L2, rho, v1, v2))), eos=eos)


def g_ll_components(frame: AcousticFrame, rho, eos: EquationOfState) -> np.ndarray:
    """G_LL⁰ = -2c_s⁻¹c_s'，G_LLⁱ = 2c_s⁻²Xⁱ"""
    cs = eos.sound_speed(rho)
    dcs = eos.sound_speed_deriv(rho)
    return np.stack([-2.0 * dcs / cs, 2.0 * frame.X[..., 1] / cs ** 2, 2.0 * frame.X[..., 2] / cs ** 2], axis=-1)


def g_ll_contraction(frame: AcousticFrame, rho, v1, v2, eos: EquationOfState) -> np.ndarray:
    """G^ι_{αβ}LᵅLᵝ，用于核对 g_ll_components 的闭式"""
    return g_contract(metric_jacobian(rho, v1, v2, eos), frame.L, frame.L)


def key_product_identity_check(
    frame: AcousticFrame, Xbr_psi: np.ndarray, L_psi: np.ndarray, rho, eos: EquationOfState
) -> np.ndarray:
    """
    ½G_LL⋄X̆Ψ 与其展开式之差

    Args:
        frame: 标架
        Xbr_psi: X̆Ψ，形状 (..., 3)
        L_psi: LΨ，形状 (..., 3)

    Returns:
        逐点残差
    """
    cs = eos.sound_speed(rho)
    dcs = eos.sound_speed_deriv(rho)
    X1, X2 = frame.X[..., 1], frame.X[..., 2]

    lhs = 0.5 * np.sum(frame.G_LL * Xbr_psi, axis=-1)
    rhs = (cs ** -2 * (dcs / cs + 1.0) * (X1 * Xbr_psi[..., 1] + X2 * Xbr_psi[..., 2])
           + frame.mu * cs ** -3 * dcs * (L_psi[..., 1] * X1 + L_psi[..., 2] * X2))
    return lhs - rhs


def frame_decompose_gradient(frame: AcousticFrame, df1, df2) -> Tuple[np.ndarray, np.ndarray]:
    """(∂₁f, ∂₂f) → (Xf, Yf)"""
    Xf = frame.X[..., 1] * df1 + frame.X[..., 2] * df2
    Yf = frame.Y[..., 1] * df1 + frame.Y[..., 2] * df2
    return Xf, Yf


def reconstruct_gradient(frame: AcousticFrame, Xf, Yf) -> Tuple[np.ndarray, np.ndarray]:
    """∂ᵢf = (gₐᵢXᵃ)Xf + (gₐᵢYᵃ/g(Y,Y))Yf"""
    cs2 = frame.cs ** 2
    gYY = frame.g_YY
    parts = []
    for i in (1, 2):
        parts.append(frame.X[..., i] / cs2 * Xf + frame.Y[..., i] / cs2 / gYY * Yf)
    return parts[0], parts[1]


def frame_identity_errors(frame: AcousticFrame, metric: AcousticMetric, v1, v2, du=None) -> Dict[str, float]:
    """
    标架与度规恒等式的最大偏差

    Args:
        frame: 标架
        metric: 同一点的度规
        v1, v2: 速度（用于 B = L + X）
        du: 可选 (∂₁u, ∂₂u)，给出时检查 μc_s|∇u| = 1
    """
    eye = np.eye(3)
    B = np.stack([np.ones_like(frame.mu), v1, v2], axis=-1)
    errors = {
        "ginv_g": float(np.max(np.abs(np.einsum("...ab,...bc->...ac", metric.g_inv, metric.g) - eye))),
        "g_LL": float(np.max(np.abs(metric_inner(metric.g, frame.L, frame.L)))),
        "g_LX": float(np.max(np.abs(metric_inner(metric.g, frame.L, frame.X) + 1.0))),
        "g_XX": float(np.max(np.abs(metric_inner(metric.g, frame.X, frame.X) - 1.0))),
        "B_L_X": float(np.max(np.abs(B - frame.L - frame.X))),
        "g_YX": float(np.max(np.abs(metric_inner(metric.g, frame.Y, frame.X)))),
        "g_YL": float(np.max(np.abs(metric_inner(metric.g, frame.Y, frame.L)))),
    }
    if du is not None:
        errors["mu_cs_grad_u"] = float(np.max(np.abs(frame.mu * frame.cs * np.hypot(du[0], du[1]) - 1.0)))
    return errors


# ==================== Eikonal ====================
class EikonalSolver:
    """
    Euler 网格上的程函方程 ∂_t u = -v·∇u + c_s|∇u|

    复用 EulerSolver 的差分模板、滤波器与 RK4 阶段快照，保持耦合 RK4 精确。
    """

    def __init__(self, solver: EulerSolver, mu_stop: float = 0.05):
        self.solver = solver
        self.eos = solver.eos
        self.grid = solver.grid
        self.mu_stop = mu_stop
        X1, _ = self.grid.mesh()
        self._affine = 1.0 - X1

    def initial_u_tilde(self) -> np.ndarray:
        return np.zeros((self.grid.n1, self.grid.n2))

    def u_field(self, u_tilde: np.ndarray) -> np.ndarray:
        return self._affine + u_tilde

    def full_gradient(self, u_tilde: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return -1.0 + self.solver.d1(u_tilde), self.solver.d2(u_tilde)

    def eikonal_rhs(self, u_tilde: np.ndarray, state: FieldState) -> np.ndarray:
        du1, du2 = self.full_gradient(u_tilde)
        cs = self.eos.sound_speed(state.rho)
        return -(state.v1 * du1 + state.v2 * du2) + cs * np.hypot(du1, du2)

    def _check_guard(self, u_tilde: np.ndarray, state: FieldState):
        du1, du2 = self.full_gradient(u_tilde)
        c_min = float(np.min(self.eos.sound_speed(state.rho)))
        limit = 1.0 / (self.mu_stop * c_min)
        worst = float(np.max(np.hypot(du1, du2)))
        if not np.isfinite(worst) or worst > limit:
            raise GeometryDegenerate(f"|grad u| = {worst:.4g} exceeds {limit:.4g} at t={state.t:.6g}")

    def eikonal_step(self, u_tilde: np.ndarray, stages: List[StageSnapshot], dt: float) -> np.ndarray:
        """
        与 EulerSolver.step_with_stages 同步的 RK4 步

        Args:
            u_tilde: 周期部分 ũ
            stages: 四个阶段快照 [S1..S4]
            dt: 时间步长

        Returns:
            t + dt 时的 ũ（已滤波）
        """
        k1 = self.eikonal_rhs(u_tilde, stages[0].state)
        k2 = self.eikonal_rhs(u_tilde + 0.5 * dt * k1, stages[1].state)
        k3 = self.eikonal_rhs(u_tilde + 0.5 * dt * k2, stages[2].state)
        k4 = self.eikonal_rhs(u_tilde + dt * k3, stages[3].state)
        new = self.solver.filter.apply(u_tilde + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4))

        end_state = FieldState(
            t=stages[0].state.t + dt, rho=stages[3].state.rho, v1=stages[3].state.v1,
            v2=stages[3].state.v2, grid=self.grid,
        )
        self._check_guard(new, end_state)
        return new

    def frame_field(self, u_tilde: np.ndarray, state: FieldState) -> AcousticFrame:
        du1, du2 = self.full_gradient(u_tilde)
        return frame_from_eikonal(du1, du2, state.rho, state.v1, state.v2, self.eos)

    def eulerian_mu(self, u_tilde: np.ndarray, state: FieldState) -> np.ndarray:
        du1, du2 = self.full_gradient(u_tilde)
        return 1.0 / (self.eos.sound_speed(state.rho) * np.hypot(du1, du2))

    def eulerian_mu_star(self, u_tilde: np.ndarray, state: FieldState, U0: float = 1.0) -> float:
        """min{1, min μ}，取 u ∈ [0, U₀] 的区域"""
        u = self.u_field(u_tilde)
        mask = (u >= 0.0) & (u <= U0)
        if not np.any(mask):
            return 1.0
        return float(min(1.0, np.min(self.eulerian_mu(u_tilde, state)[mask])))
