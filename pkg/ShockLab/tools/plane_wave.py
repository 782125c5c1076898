"""
Plane Waves and Riemann Invariants - 平面简单波与 Riemann 不变量
初始数据构造（R₋ ≡ 0，可叠加涡度扰动）、精确简单波解、特征相交时间 T⋆ 与 δ⋆

λ(x₀) = v¹₀(x₀) + c_s(ϱ₀(x₀)) 为右行特征速度；精确解满足 x = x₀ + λ(x₀)t。

Author: Shock Lab Team
Date: 2026-10-18
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Optional, Tuple

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from ShockLab.exceptions import ConfigurationError, NoShockSignal, PostShockError
from ShockLab.tools.eos import EquationOfState
from ShockLab.tools.euler_field import FieldState, Grid
from ShockLab.tools.numerics import periodic_antiderivative, periodic_derivative

logger = logging.getLogger(__name__)

# ==================== Configuration ====================
CROSSING_SAMPLES = 200_001
NO_SHOCK_TOL = 1e-10
ROOT_XTOL = 1e-14
RAMP_MARGIN_WIDTHS = 8.0


class ProfileKind(str, Enum):
    SINE = "sine"
    BUMP = "bump"


class WindowKind(str, Enum):
    SMOOTHSTEP5 = "smoothstep5"
    CINF = "cinf"
    NONE = "none"


class VorticityProfile(str, Enum):
    NONE = "none"
    TANH_RAMP = "tanh_ramp"


# ==================== Windows ====================
def _smoothstep5(s: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """五阶 smoothstep 及其导数，s 截断到 [0, 1]"""
    s = np.clip(s, 0.0, 1.0)
    value = s ** 6 * (462 - 1980 * s + 3465 * s ** 2 - 3080 * s ** 3 + 1386 * s ** 4 - 252 * s ** 5)
    deriv = 2772.0 * s ** 5 * (1.0 - s) ** 5
    return value, deriv


def _cinf_step(s: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """基于 exp(-1/s) 的 C^∞ 过渡函数及其导数"""
    s = np.asarray(s, dtype=float)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        a = np.where(s > 0, np.exp(-1.0 / np.where(s > 0, s, 1.0)), 0.0)
        b = np.where(s < 1, np.exp(-1.0 / np.where(s < 1, 1.0 - s, 1.0)), 0.0)
        da = np.where(s > 0, a / np.where(s > 0, s, 1.0) ** 2, 0.0)
        db = np.where(s < 1, -b / np.where(s < 1, 1.0 - s, 1.0) ** 2, 0.0)
        total = a + b
        value = a / total
        deriv = (da * total - a * (da + db)) / total ** 2
    return value, deriv


def _window(xi: np.ndarray, kind: WindowKind, width: float) -> Tuple[np.ndarray, np.ndarray]:
    """窗函数 w(ξ) 与 dw/dξ：ξ ∈ [width, 1-width] 上 w ≡ 1"""
    if kind is WindowKind.NONE:
        return np.ones_like(xi), np.zeros_like(xi)
    step = _smoothstep5 if kind is WindowKind.SMOOTHSTEP5 else _cinf_step
    left, dleft = step(xi / width)
    right, dright = step((1.0 - xi) / width)
    return left * right, (dleft * right - left * dright) / width


@dataclass(frozen=True)
class DataRecipe:
    """初始数据配方"""

    amplitude: float = 0.01
    profile: str = "sine"
    window: str = "smoothstep5"
    window_width: float = 0.1
    support: Tuple[float, float] = (0.0, 1.0)
    vorticity_lambda: float = 0.0
    vorticity_profile: str = "none"
    ramp: Tuple[float, float] = (-1.0, 11.0)
    ramp_width: float = 0.25

    def __post_init__(self):
        bad = []
        try:
            ProfileKind(self.profile)
        except ValueError:
            bad.append("data.profile")
        try:
            WindowKind(self.window)
        except ValueError:
            bad.append("data.window")
        try:
            VorticityProfile(self.vorticity_profile)
        except ValueError:
            bad.append("data.vorticity_profile")
        s0, s1 = self.support
        if not (0.0 <= s0 < s1 <= 1.0):
            bad.append("data.support")
        if self.amplitude < 0 or not np.isfinite(self.amplitude):
            bad.append("data.amplitude")
        if not 0.0 < self.window_width <= 0.5:
            bad.append("data.window_width")
        if self.vorticity_lambda < 0:
            bad.append("data.vorticity_lambda")
        if self.ramp[0] >= self.ramp[1] or self.ramp_width <= 0:
            bad.append("data.ramp")
        if bad:
            raise ConfigurationError("invalid data recipe", bad)

    # ==================== Profiles ====================
    def _xi(self, x: np.ndarray) -> Tuple[np.ndarray, float]:
        s0, s1 = self.support
        return (np.asarray(x, dtype=float) - s0) / (s1 - s0), 1.0 / (s1 - s0)

    def v1_profile(self, x: np.ndarray) -> np.ndarray:
        """v¹₀(x)，支集在 support 内"""
        return self._profile(x)[0]

    def v1_profile_deriv(self, x: np.ndarray) -> np.ndarray:
        """dv¹₀/dx（解析）"""
        return self._profile(x)[1]

    def _profile(self, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        xi, dxi = self._xi(x)
        inside = (xi > 0.0) & (xi < 1.0)
        value = np.zeros_like(xi)
        deriv = np.zeros_like(xi)
        if not np.any(inside):
            return value, deriv

        z = xi[inside]
        if ProfileKind(self.profile) is ProfileKind.SINE:
            w, dw = _window(z, WindowKind(self.window), self.window_width)
            value[inside] = w * np.sin(2.0 * np.pi * z)
            deriv[inside] = dw * np.sin(2.0 * np.pi * z) + 2.0 * np.pi * w * np.cos(2.0 * np.pi * z)
        else:
            s = 2.0 * z - 1.0
            q = 1.0 - s ** 2
            phi = np.exp(1.0 - 1.0 / q)
            value[inside] = phi
            deriv[inside] = phi * (-4.0 * s / q ** 2)

        return self.amplitude * value, self.amplitude * dxi * deriv


@dataclass
class InitialDataReport:
    """实际实现的尺度参数"""

    epsilon: float
    delta_ring: float
    sup_psi: float
    sup_d1v1: float
    delta_star: float

    def as_dict(self) -> Dict[str, float]:
        return dict(self.__dict__)


# ==================== Riemann invariants ====================
def riemann_invariants(state: FieldState, eos: EquationOfState) -> Tuple[np.ndarray, np.ndarray]:
    """(R₋, R₊) = (v¹ - F(ϱ), v¹ + F(ϱ))"""
    F = eos.riemann_potential(state.rho)
    return state.v1 - F, state.v1 + F


def vorticity_ramp(recipe: DataRecipe, grid: Grid) -> np.ndarray:
    """
    v² 扰动的轮廓 f(x¹)（周期、零均值）

    f' = w - mean(w)，w 为 ramp 区间上的 tanh 平台；f 由谱积分得到。
    """
    if VorticityProfile(recipe.vorticity_profile) is VorticityProfile.NONE:
        return np.zeros(grid.n1)

    r0, r1 = recipe.ramp
    margin = RAMP_MARGIN_WIDTHS * recipe.ramp_width
    if r0 - margin < grid.x1_offset or r1 + margin > grid.x1_offset + grid.L1:
        raise ConfigurationError(
            f"vorticity ramp [{r0}, {r1}] needs {margin:g} clearance inside the periodic window",
            ["data.ramp_start", "data.ramp_end", "grid.x1_offset", "grid.L1"],
        )
    x = grid.x1
    w = 0.5 * (np.tanh((x - r0) / recipe.ramp_width) - np.tanh((x - r1) / recipe.ramp_width))
    return periodic_antiderivative(w - np.mean(w), grid.L1)


def delta_star(state0: FieldState, eos: EquationOfState, stencil_order: int = 6) -> float:
    """
    δ⋆ = ½ sup_{x¹ ∈ [0,1]} [(G_LL⁰ + G_LL¹) X̆v¹]₋

    t = 0 标架：X = -c_s∂₁，X̆ = -∂₁
    """
    grid = state0.grid
    cs = eos.sound_speed(state0.rho)
    dcs = eos.sound_speed_deriv(state0.rho)
    G0 = -2.0 * dcs / cs
    G1 = -2.0 / cs
    Xbr_v1 = -periodic_derivative(state0.v1, grid.h1, axis=0, order=stencil_order)

    bracket = (G0 + G1) * Xbr_v1
    X1, _ = grid.mesh()
    region = (X1 >= 0.0) & (X1 <= 1.0)
    negative = np.maximum(-bracket[region], 0.0)
    return 0.5 * float(np.max(negative)) if negative.size else 0.0


def build_initial_data(
    recipe: DataRecipe, eos: EquationOfState, grid: Grid, stencil_order: int = 6
) -> Tuple[FieldState, InitialDataReport]:
    """
    构造 t = 0 状态：ϱ₀ = F⁻¹(v¹₀)，v²₀ = λf(x¹)

    Returns:
        (初始状态, 尺度参数报告)
    """
    s0, s1 = recipe.support
    if grid.x1_offset > s0 or grid.x1_offset + grid.L1 <= s1:
        raise ConfigurationError("periodic window must contain the data support", ["grid.x1_offset", "grid.L1"])

    x = grid.x1
    v1_line = recipe.v1_profile(x)
    rho_line = eos.inverse_riemann_potential(v1_line)
    v2_line = recipe.vorticity_lambda * vorticity_ramp(recipe, grid)

    shape = (grid.n1, grid.n2)
    state = FieldState(
        t=0.0,
        rho=np.broadcast_to(rho_line[:, None], shape).copy(),
        v1=np.broadcast_to(v1_line[:, None], shape).copy(),
        v2=np.broadcast_to(v2_line[:, None], shape).copy(),
        grid=grid,
    )

    d1 = lambda f: periodic_derivative(f, grid.h1, axis=0, order=stencil_order)
    sup_psi = float(max(np.max(np.abs(state.rho)), np.max(np.abs(state.v1)), np.max(np.abs(state.v2))))
    report = InitialDataReport(
        epsilon=sup_psi,
        delta_ring=float(max(np.max(np.abs(d1(state.rho))), np.max(np.abs(d1(state.v1))), np.max(np.abs(d1(state.v2))))),
        sup_psi=sup_psi,
        sup_d1v1=float(np.max(np.abs(recipe.v1_profile_deriv(x)))),
        delta_star=delta_star(state, eos, stencil_order),
    )
    logger.info(
        f"✓ Initial data: eps={report.epsilon:.4g}, delta_ring={report.delta_ring:.4g}, "
        f"delta_star={report.delta_star:.6g}"
    )
    return state, report


# ==================== Exact simple wave ====================
def characteristic_speed(recipe: DataRecipe, eos: EquationOfState, x0: np.ndarray) -> np.ndarray:
    """λ(x₀) = v¹₀ + c_s(ϱ₀)"""
    v0 = recipe.v1_profile(x0)
    return v0 + eos.sound_speed(eos.inverse_riemann_potential(v0))


def characteristic_speed_deriv(recipe: DataRecipe, eos: EquationOfState, x0: np.ndarray) -> np.ndarray:
    """dλ/dx₀ = v¹₀'(1 + c_s'/c_s)，因为 dϱ₀/dx₀ = v¹₀'/c_s"""
    v0 = recipe.v1_profile(x0)
    rho0 = eos.inverse_riemann_potential(v0)
    return recipe.v1_profile_deriv(x0) * eos.genuine_nonlinearity(rho0)


def crossing_time(recipe: DataRecipe, eos: EquationOfState, n_samples: int = CROSSING_SAMPLES) -> float:
    """
    特征相交时间 T⋆ = 1 / max[-dλ/dx₀]₊（密集采样 + 局部加密）

    Raises:
        NoShockSignal: 数据处处不压缩
    """
    s0, s1 = recipe.support
    x0 = np.linspace(s0, s1, n_samples)
    rate = -characteristic_speed_deriv(recipe, eos, x0)
    scale = float(np.max(np.abs(recipe.v1_profile_deriv(x0))))
    i = int(np.argmax(rate))
    if rate[i] <= NO_SHOCK_TOL * scale or scale == 0.0:
        raise NoShockSignal(f"data is nowhere compressive (max rate {rate[i]:.3g})")

    lo, hi = x0[max(i - 1, 0)], x0[min(i + 1, n_samples - 1)]
    refined = minimize_scalar(
        lambda z: float(characteristic_speed_deriv(recipe, eos, np.array([z]))[0]),
        bounds=(lo, hi), method="bounded", options={"xatol": 1e-13},
    )
    best = max(float(rate[i]), -float(refined.fun))
    return 1.0 / best


def _foot_points(recipe: DataRecipe, eos: EquationOfState, x: np.ndarray, t: float) -> np.ndarray:
    """解 x = x₀ + λ(x₀)t 求 x₀"""
    s0, s1 = recipe.support
    dense = np.linspace(s0, s1, 4001)
    lam = characteristic_speed(recipe, eos, dense)
    lam_min, lam_max = float(min(lam.min(), 1.0)), float(max(lam.max(), 1.0))

    def residual(z: float, target: float) -> float:
        return z + float(characteristic_speed(recipe, eos, np.array([z]))[0]) * t - target

    # 采样得到的 λ 范围可能略窄，括号两端各留余量
    pad = 1e-9 + 0.01 * (lam_max - lam_min) * t
    flat = np.asarray(x, dtype=float).ravel()
    out = np.empty_like(flat)
    for n, target in enumerate(flat):
        lo = target - lam_max * t - pad
        hi = target - lam_min * t + pad
        out[n] = brentq(residual, lo, hi, args=(target,), xtol=ROOT_XTOL)
    return out.reshape(np.shape(x))


def exact_simple_wave(
    recipe: DataRecipe, eos: EquationOfState, x: np.ndarray, t: float, t_star: Optional[float] = None
) -> Tuple[np.ndarray, np.ndarray]:
    """
    精确右行简单波 (ϱ, v¹)

    Args:
        recipe: 数据配方（v² 扰动被忽略）
        eos: 状态方程
        x: 采样点
        t: 时间
        t_star: 可选的预先计算的 T⋆

    Raises:
        PostShockError: t ≥ T⋆
    """
    x = np.asarray(x, dtype=float)
    if t == 0.0:
        v1 = recipe.v1_profile(x)
        return eos.inverse_riemann_potential(v1), v1

    _check_pre_shock(recipe, eos, t, t_star)
    v1 = recipe.v1_profile(_foot_points(recipe, eos, x, t))
    return eos.inverse_riemann_potential(v1), v1


def exact_simple_wave_derivatives(
    recipe: DataRecipe, eos: EquationOfState, x: np.ndarray, t: float, t_star: Optional[float] = None
) -> Dict[str, np.ndarray]:
    """
    精确解的解析导数：∂ₓ· = ·₀'/(1 + λ't)，∂ₜ· = -λ·₀'/(1 + λ't)
    """
    x = np.asarray(x, dtype=float)
    if t > 0.0:
        _check_pre_shock(recipe, eos, t, t_star)
        x0 = _foot_points(recipe, eos, x, t)
    else:
        x0 = x
    v0 = recipe.v1_profile(x0)
    rho0 = eos.inverse_riemann_potential(v0)
    dv0 = recipe.v1_profile_deriv(x0)
    drho0 = dv0 / eos.sound_speed(rho0)
    lam = v0 + eos.sound_speed(rho0)
    stretch = 1.0 + characteristic_speed_deriv(recipe, eos, x0) * t

    return {
        "rho": rho0, "v1": v0,
        "rho_x": drho0 / stretch, "v1_x": dv0 / stretch,
        "rho_t": -lam * drho0 / stretch, "v1_t": -lam * dv0 / stretch,
    }


def exact_mu_simple_wave(recipe: DataRecipe, eos: EquationOfState, x0: np.ndarray, t: float) -> np.ndarray:
    """沿以 x₀ 为起点的特征线：μ(t) = (1 + λ'(x₀)t) / c_s(ϱ₀(x₀))"""
    x0 = np.asarray(x0, dtype=float)
    rho0 = eos.inverse_riemann_potential(recipe.v1_profile(x0))
    return (1.0 + characteristic_speed_deriv(recipe, eos, x0) * t) / eos.sound_speed(rho0)


def _check_pre_shock(recipe: DataRecipe, eos: EquationOfState, t: float, t_star: Optional[float]):
    if t_star is None:
        try:
            t_star = crossing_time(recipe, eos)
        except NoShockSignal:
            return
    if t >= t_star:
        raise PostShockError(f"t={t:.6g} is past the crossing time {t_star:.6g}")
