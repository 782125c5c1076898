"""
Shock Diagnostics - 激波形成诊断
波动-输运重构的残差、零形式、爆破率指标、正则性层级与 μ⋆ 线性拟合

    μ□_g vⁱ = -[ia]e^ϱc_s²(μ∂_aϖ) + 2[ia]e^ϱϖ(μBvᵃ) + μ𝒬ⁱ
    μ□_g ϱ  = μ𝒬
    μBϖ     = 0
其中 [12] = +1，□_g f = c_s²[-∂_t(c_s⁻²Bf) - ∂_a(c_s⁻²vᵃBf) + Δf]。

残差的形式精度：波动方程 q = min(p, 4)（时间方向五点模板），μBϖ 为 q = p。

Author: Shock Lab Team
Date: 2026-10-18
"""

import logging
from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import Deque, Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd
from sklearn.linear_model import LinearRegression

from ShockLab.exceptions import NotReady
from ShockLab.tools.acoustic_geometry import AcousticFrame
from ShockLab.tools.char_tracer import CharLattice, LatticeDerivatives
from ShockLab.tools.eos import EquationOfState
from ShockLab.tools.euler_field import EulerSolver, FieldState, StageSnapshot

logger = logging.getLogger(__name__)

# ==================== Configuration ====================
BUFFER_DEPTH = 5
BLOWUP_NEIGHBORHOOD = 5
FIT_READY_MU = 0.2
FIT_TAIL_FRACTION = 0.3
FIT_RANGE_FRACTION = 0.9
MIN_FIT_SAMPLES = 8

CSV_COLUMNS: List[str] = [
    "t", "mu_star", "max_Xv1", "max_Xrho", "max_grad_v", "max_grad_vort", "lip_vort", "max_trchi",
    "max_Xbrv2", "max_Xbr_rho_minus_v1", "res_wave_rho", "res_wave_v1", "res_wave_v2", "res_transport",
]

EXTRA_COLUMNS: List[str] = [
    "mu_star_eikonal", "max_trchi_a", "max_Xbr_v1", "max_Xbr_rho", "max_tangential", "max_L_rho", "max_Y_rho",
    "blowup_Xv1_mu", "blowup_Xrho_mu", "blowup_neighborhood_min", "vort_worst", "mu_dual_rel",
    "label_drift", "min_oriented_det", "volume_ratio_dev", "frame_identity_err", "lattice_gXX_drift",
    "res_time", "total_mass", "max_grad_v1", "max_grad_v2", "key_product_err", "vort_source_err",
    "null_form_max", "grad_v_seed_worst",
]


# ==================== Record ====================
class DiagnosticsRecord:
    """按时间追加的诊断记录；t 必须单调不减"""

    def __init__(self, delta_star: float = float("nan")):
        self.delta_star = delta_star
        self._rows: List[Dict[str, float]] = []

    def append(self, **row: float):
        t = float(row["t"])
        if self._rows and t < self._rows[-1]["t"]:
            raise ValueError(f"record times must be monotone: {t} after {self._rows[-1]['t']}")
        self._rows.append({k: float(v) for k, v in row.items()})

    def __len__(self) -> int:
        return len(self._rows)

    def to_frame(self) -> pd.DataFrame:
        df = pd.DataFrame(self._rows)
        for col in CSV_COLUMNS + EXTRA_COLUMNS:
            if col not in df.columns:
                df[col] = np.nan
        return df[CSV_COLUMNS + EXTRA_COLUMNS]

    def to_csv(self, path: Union[str, Path]):
        self.to_frame().to_csv(path, index=False, float_format="%.12e")


# ==================== Wave residuals ====================
def inverse_metric_product(state: FieldState, eos: EquationOfState, Bf, Bh, grad_f, grad_h) -> np.ndarray:
    """(g⁻¹)(df, dh) = -(Bf)(Bh) + c_s²∇f·∇h"""
    cs2 = eos.sound_speed(state.rho) ** 2
    return -Bf * Bh + cs2 * (grad_f[0] * grad_h[0] + grad_f[1] * grad_h[1])


def null_form_cross_term(solver: EulerSolver, state: FieldState) -> np.ndarray:
    """∂₁v¹∂₂v² - ∂₂v¹∂₁v²；x² 无关时恒为 0"""
    g = solver.gradients(state)
    return g.v11 * g.v22 - g.v12 * g.v21


class WaveResidualBuffer:
    """
    保存五个等距时间层，在中间层组装 μ□_g f 与右端项之差
    """

    def __init__(self, solver: EulerSolver, depth: int = BUFFER_DEPTH):
        self.solver = solver
        self.eos = solver.eos
        self._levels: Deque[Tuple[FieldState, Optional[np.ndarray]]] = deque(maxlen=depth)

    def push(self, state: FieldState, mu: Optional[np.ndarray] = None):
        self._levels.append((state, mu))

    @property
    def ready(self) -> bool:
        if len(self._levels) < BUFFER_DEPTH:
            return False
        times = np.array([s.t for s, _ in self._levels])
        steps = np.diff(times)
        return bool(np.all(steps > 0) and np.allclose(steps, steps[0], rtol=1e-9, atol=0.0))

    @property
    def center_time(self) -> float:
        return self._levels[2][0].t

    def _require(self):
        if not self.ready:
            raise NotReady("wave residual needs five equally spaced time levels")

    def _time_derivatives(self, name: str) -> Tuple[np.ndarray, np.ndarray]:
        """四阶中心模板：(∂_t f, ∂_t² f) 于中间层"""
        f = [getattr(s, name) for s, _ in self._levels]
        dt = self._levels[1][0].t - self._levels[0][0].t
        first = (f[0] - 8.0 * f[1] + 8.0 * f[3] - f[4]) / (12.0 * dt)
        second = (-f[0] + 16.0 * f[1] - 30.0 * f[2] + 16.0 * f[3] - f[4]) / (12.0 * dt ** 2)
        return first, second

    def _center(self) -> Tuple[FieldState, np.ndarray]:
        state, mu = self._levels[2]
        return state, (mu if mu is not None else np.ones_like(state.rho))

    def covariant_wave_residual(self, component: str) -> np.ndarray:
        """
        μ□_g f - μ·RHS_f，component ∈ {"rho", "v1", "v2"}

        Raises:
            NotReady: 缓冲层数不足
        """
        if component not in ("rho", "v1", "v2"):
            raise ValueError(f"unknown component '{component}'")
        self._require()
        s, mu = self._center()
        d1, d2 = self.solver.d1, self.solver.d2
        eos = self.eos

        cs = eos.sound_speed(s.rho)
        dcs = eos.sound_speed_deriv(s.rho)
        inv_cs2 = cs ** -2

        rates = {n: self._time_derivatives(n) for n in ("rho", "v1", "v2")}
        grads = {n: (d1(getattr(s, n)), d2(getattr(s, n))) for n in ("rho", "v1", "v2")}
        B = {n: rates[n][0] + s.v1 * grads[n][0] + s.v2 * grads[n][1] for n in ("rho", "v1", "v2")}

        f = getattr(s, component)
        ft, ftt = rates[component]
        fx, fy = grads[component]
        Bf = B[component]

        dt_term = (inv_cs2 * (ftt + rates["v1"][0] * fx + rates["v2"][0] * fy + s.v1 * d1(ft) + s.v2 * d2(ft))
                   - 2.0 * cs ** -3 * dcs * rates["rho"][0] * Bf)
        div_term = d1(inv_cs2 * s.v1 * Bf) + d2(inv_cs2 * s.v2 * Bf)
        laplace = d1(fx) + d2(fy)
        box = cs ** 2 * (-dt_term - div_term + laplace)

        def ginv(a: str, b: str) -> np.ndarray:
            return inverse_metric_product(s, eos, B[a], B[b], grads[a], grads[b])

        if component == "rho":
            cross = grads["v1"][0] * grads["v2"][1] - grads["v1"][1] * grads["v2"][0]
            rhs = -2.0 * dcs / cs * ginv("rho", "rho") + 2.0 * cross
        else:
            vort = self.solver.specific_vorticity(s)
            e_rho = np.exp(s.rho)
            if component == "v1":
                rhs = -e_rho * cs ** 2 * d2(vort) + 2.0 * e_rho * vort * B["v2"]
            else:
                rhs = e_rho * cs ** 2 * d1(vort) - 2.0 * e_rho * vort * B["v1"]
            rhs = rhs - ginv("rho", component)

        return mu * (box - rhs)

    def transport_residual(self) -> np.ndarray:
        """中间层的 μBϖ"""
        self._require()
        s, mu = self._center()
        return mu * self.solver.vorticity_transport_residual(s)

    def residual_norms(self) -> Dict[str, float]:
        """四个残差的最大范数；未就绪时返回 NaN"""
        if not self.ready:
            return {k: float("nan") for k in ("res_wave_rho", "res_wave_v1", "res_wave_v2", "res_transport", "res_time")}
        return {
            "res_wave_rho": float(np.max(np.abs(self.covariant_wave_residual("rho")))),
            "res_wave_v1": float(np.max(np.abs(self.covariant_wave_residual("v1")))),
            "res_wave_v2": float(np.max(np.abs(self.covariant_wave_residual("v2")))),
            "res_transport": float(np.max(np.abs(self.transport_residual()))),
            "res_time": self.center_time,
        }


# ==================== Vorticity source ====================
def vorticity_source_frame_check(solver: EulerSolver, snap: StageSnapshot, frame: AcousticFrame) -> np.ndarray:
    """
    -[ia]e^ϱc_s²μ∂_aϖ 与其标架分解之差，形状 (n1, n2, 2)

    分解：[ia]μe^ϱc_s²(g_abXᵇ)Lϖ - [ia]μe^ϱc_s²(g_abYᵇ/g(Y,Y))Yϖ（Xϖ 已由 -Lϖ 代替）
    """
    s = snap.state
    vort = solver.specific_vorticity(s, snap.grads)
    w1, w2 = solver.d1(vort), solver.d2(vort)
    wt = solver.vorticity_time_derivative(snap)

    cs2 = frame.cs ** 2
    weight = frame.mu * np.exp(s.rho) * cs2
    L_vort = wt + frame.L[..., 1] * w1 + frame.L[..., 2] * w2
    Y_vort = frame.Y[..., 1] * w1 + frame.Y[..., 2] * w2
    gYY = frame.g_YY

    # 下标 a 对应的分解系数
    coeff = [frame.X[..., a] / cs2 * L_vort - frame.Y[..., a] / cs2 / gYY * Y_vort for a in (1, 2)]

    lhs1 = -weight * w2
    lhs2 = weight * w1
    rhs1 = weight * coeff[1]
    rhs2 = -weight * coeff[0]
    return np.stack([lhs1 - rhs1, lhs2 - rhs2], axis=-1)


# ==================== Blowup and hierarchy ====================
@dataclass
class BlowupIndicator:
    mu_star: float
    late_phase: bool
    max_Xv1_mu: float
    max_Xrho_mu: float
    neighborhood_min: float
    reference: float
    worst_index: Tuple[int, int]


def blowup_reference(delta_star: float, eos: EquationOfState) -> float:
    """δ⋆/(8|c̄_s' + 1|)"""
    factor = abs(eos.background_sound_speed_deriv + 1.0)
    return delta_star / (8.0 * factor) if factor > 0 else float("nan")


def blowup_indicator(
    lattice: CharLattice, derivs: LatticeDerivatives, delta_star: float, eos: EquationOfState,
    neighborhood: int = BLOWUP_NEIGHBORHOOD,
) -> BlowupIndicator:
    """
    |Xv¹|·μ = |X̆v¹| 与 |Xϱ|·μ 的格点最大值，以及最差特征线邻域内 |X̆v¹| 的最小值
    """
    mu = lattice.fields.mu
    mu_star = float(min(1.0, np.min(mu)))
    Xv1_mu = np.abs(derivs.Xbr_psi[..., 1])
    Xrho_mu = np.abs(derivs.Xbr_psi[..., 0])

    j, k = np.unravel_index(int(np.argmin(mu)), mu.shape)
    n_u, n_theta = mu.shape
    rows = np.arange(max(j - neighborhood, 0), min(j + neighborhood, n_u - 1) + 1)
    cols = np.mod(np.arange(k - neighborhood, k + neighborhood + 1), n_theta)
    patch = Xv1_mu[np.ix_(rows, cols)]

    return BlowupIndicator(
        mu_star=mu_star,
        late_phase=mu_star < 0.5,
        max_Xv1_mu=float(np.max(Xv1_mu)),
        max_Xrho_mu=float(np.max(Xrho_mu)),
        neighborhood_min=float(np.min(patch)),
        reference=blowup_reference(delta_star, eos),
        worst_index=(int(j), int(k)),
    )


def regularity_hierarchy(derivs: LatticeDerivatives) -> Dict[str, float]:
    """“小量”（切向导数、X̆(ϱ - v¹)、X̆v²）与“大量”（X̆ϱ、X̆v¹）的最大值"""
    Xbr, Lpsi, Ypsi = derivs.Xbr_psi, derivs.L_psi, derivs.Y_psi
    out = {
        "max_Xbr_rho_minus_v1": float(np.max(np.abs(Xbr[..., 0] - Xbr[..., 1]))),
        "max_Xbrv2": float(np.max(np.abs(Xbr[..., 2]))),
        "max_L_rho": float(np.max(np.abs(Lpsi[..., 0]))),
        "max_L_v1": float(np.max(np.abs(Lpsi[..., 1]))),
        "max_L_v2": float(np.max(np.abs(Lpsi[..., 2]))),
        "max_Y_rho": float(np.max(np.abs(Ypsi[..., 0]))),
        "max_Y_v1": float(np.max(np.abs(Ypsi[..., 1]))),
        "max_Y_v2": float(np.max(np.abs(Ypsi[..., 2]))),
        "max_Xbr_rho": float(np.max(np.abs(Xbr[..., 0]))),
        "max_Xbr_v1": float(np.max(np.abs(Xbr[..., 1]))),
    }
    out["max_tangential"] = max(out[k] for k in out if k.startswith(("max_L_", "max_Y_")))
    return out


# ==================== Lifespan ====================
@dataclass
class MuFit:
    kappa: float
    intercept: float
    max_residual: float
    T_obs: float
    n_samples: int


def _linear_fit(t: np.ndarray, mu: np.ndarray) -> LinearRegression:
    return LinearRegression().fit(t.reshape(-1, 1), mu)


def mu_linearity_fit(record: pd.DataFrame, mu_stop: float = 0.05) -> MuFit:
    """
    μ⋆(t) 的线性拟合

    T_obs 为 μ_stop 之前最后 30% 时段线性拟合的零点；κ 与最大残差取自 [0, 0.9·T_obs]。

    Raises:
        NotReady: μ⋆ 未降到 0.2 以下或样本不足
    """
    df = record[["t", "mu_star"]].dropna()
    if df.empty or df["mu_star"].min() > FIT_READY_MU:
        raise NotReady("mu_star never reached 0.2; no lifespan fit")

    stopped = df[df["mu_star"] <= mu_stop]
    t_end = float(stopped["t"].iloc[0]) if not stopped.empty else float(df["t"].iloc[-1])
    tail = df[(df["t"] >= (1.0 - FIT_TAIL_FRACTION) * t_end) & (df["t"] <= t_end)]
    if len(tail) < 2:
        raise NotReady("too few samples in the late-time window")
    tail_fit = _linear_fit(tail["t"].to_numpy(), tail["mu_star"].to_numpy())
    slope = float(tail_fit.coef_[0])
    if slope >= 0:
        raise NotReady("mu_star is not decreasing in the late-time window")
    T_obs = -float(tail_fit.intercept_) / slope

    body = df[df["t"] <= FIT_RANGE_FRACTION * T_obs]
    if len(body) < MIN_FIT_SAMPLES:
        raise NotReady(f"only {len(body)} samples in [0, 0.9 T_obs]")
    t = body["t"].to_numpy()
    mu = body["mu_star"].to_numpy()
    fit = _linear_fit(t, mu)
    residual = np.abs(mu - fit.predict(t.reshape(-1, 1)))

    return MuFit(
        kappa=-float(fit.coef_[0]),
        intercept=float(fit.intercept_),
        max_residual=float(np.max(residual)),
        T_obs=T_obs,
        n_samples=len(body),
    )
