"""
Barotropic Equation of State - 正压状态方程
归一化声速 c_s(ϱ)、导数 c_s'、Riemann 势 F(ϱ) 及其反函数

ϱ = ln(ρ/ρ̄) 为对数密度，背景状态 ϱ = 0 处 c_s = 1。
支持三类状态方程：
- polytropic: p ∝ ρ^γ，c_s = exp((γ-1)ϱ/2)
- chaplygin: p = -A/ρ，c_s = exp(-ϱ)（线性退化）
- custom: 二列表格 (ϱ, c_s)，单调三次插值

Author: Shock Lab Team
Date: 2026-10-18
"""

import logging
from enum import Enum
from pathlib import Path
from typing import Optional, Union

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq

from ShockLab.exceptions import ConfigurationError, EOSDomainError

logger = logging.getLogger(__name__)

# ==================== Constants ====================
RHO_LIMIT = 1.0
CUSTOM_DERIV_STEP = 1e-5
DEGENERACY_SAMPLES = 64
DEGENERACY_TOL = 1e-12
INVERSE_XTOL = 1e-14

ArrayLike = Union[float, np.ndarray]


class EOSKind(str, Enum):
    POLYTROPIC = "polytropic"
    CHAPLYGIN = "chaplygin"
    CUSTOM = "custom"


class EquationOfState:
    """
    正压状态方程（不可变）

    所有函数对数组逐元素计算；ϱ 超出 [-1, 1] 时抛出 EOSDomainError。
    """

    def __init__(
        self,
        kind: Union[str, EOSKind],
        gamma: float = 3.0,
        table_rho: Optional[np.ndarray] = None,
        table_cs: Optional[np.ndarray] = None,
    ):
        try:
            self.kind = EOSKind(kind)
        except ValueError:
            raise ConfigurationError(f"unknown EOS kind '{kind}'", ["eos.kind"])

        self.gamma = float(gamma)
        self._cs_interp: Optional[PchipInterpolator] = None
        self._F_interp = None
        self._F0 = 0.0

        if self.kind is EOSKind.POLYTROPIC:
            if not np.isfinite(self.gamma) or self.gamma <= 0.0 or self.gamma == 1.0:
                raise ConfigurationError(f"polytropic gamma must be > 0 and != 1, got {gamma}", ["eos.gamma"])
        elif self.kind is EOSKind.CUSTOM:
            self._build_table(table_rho, table_cs)

    # ==================== Constructors ====================
    @classmethod
    def polytropic(cls, gamma: float = 3.0) -> "EquationOfState":
        return cls(EOSKind.POLYTROPIC, gamma=gamma)

    @classmethod
    def chaplygin(cls) -> "EquationOfState":
        return cls(EOSKind.CHAPLYGIN)

    @classmethod
    def from_table(cls, path: Union[str, Path]) -> "EquationOfState":
        """从二列文本文件 (ϱ, c_s) 读取自定义状态方程"""
        path = Path(path)
        if not path.exists():
            raise ConfigurationError(f"EOS table not found: {path}", ["eos.table_path"])
        table = np.loadtxt(path, ndmin=2)
        if table.shape[1] != 2:
            raise ConfigurationError("EOS table must have two columns (rho, c_s)", ["eos.table_path"])
        logger.info(f"✓ Loaded EOS table with {table.shape[0]} rows from {path}")
        return cls(EOSKind.CUSTOM, table_rho=table[:, 0], table_cs=table[:, 1])

    def _build_table(self, table_rho: Optional[np.ndarray], table_cs: Optional[np.ndarray]):
        if table_rho is None or table_cs is None:
            raise ConfigurationError("custom EOS requires a table", ["eos.table_path"])
        rho = np.asarray(table_rho, dtype=float)
        cs = np.asarray(table_cs, dtype=float)

        if rho.size < 4 or np.any(np.diff(rho) <= 0):
            raise ConfigurationError("EOS table rho column must be strictly increasing (>= 4 rows)", ["eos.table_path"])
        if rho[0] > -RHO_LIMIT or rho[-1] < RHO_LIMIT:
            raise ConfigurationError("EOS table must cover rho in [-1, 1]", ["eos.table_path"])
        if np.any(~np.isfinite(cs)) or np.any(cs <= 0):
            raise ConfigurationError("non-invertible tabulation: c_s must be positive", ["eos.table_path"])

        raw = PchipInterpolator(rho, cs, extrapolate=True)
        self._cs_interp = PchipInterpolator(rho, cs / float(raw(0.0)), extrapolate=True)
        self._F_interp = self._cs_interp.antiderivative()
        self._F0 = float(self._F_interp(0.0))

    # ==================== Domain ====================
    @staticmethod
    def _check_rho(rho: ArrayLike) -> np.ndarray:
        arr = np.asarray(rho, dtype=float)
        bad = ~np.isfinite(arr) | (np.abs(arr) > RHO_LIMIT)
        if np.any(bad):
            worst = arr[bad].ravel()[0]
            raise EOSDomainError(f"rho={worst:.6g} outside the working interval [-1, 1]")
        return arr

    # ==================== Sound speed ====================
    def sound_speed(self, rho: ArrayLike) -> np.ndarray:
        """归一化声速 c_s(ϱ)，c_s(0) = 1"""
        rho = self._check_rho(rho)
        if self.kind is EOSKind.POLYTROPIC:
            return np.exp(0.5 * (self.gamma - 1.0) * rho)
        if self.kind is EOSKind.CHAPLYGIN:
            return np.exp(-rho)
        return self._cs_interp(rho)

    def sound_speed_deriv(self, rho: ArrayLike) -> np.ndarray:
        """c_s'(ϱ) = dc_s/dϱ"""
        rho = self._check_rho(rho)
        if self.kind is EOSKind.POLYTROPIC:
            return 0.5 * (self.gamma - 1.0) * np.exp(0.5 * (self.gamma - 1.0) * rho)
        if self.kind is EOSKind.CHAPLYGIN:
            return -np.exp(-rho)
        h = CUSTOM_DERIV_STEP
        return (self._cs_interp(rho + h) - self._cs_interp(rho - h)) / (2.0 * h)

    def genuine_nonlinearity(self, rho: ArrayLike) -> np.ndarray:
        """c_s⁻¹c_s' + 1；Chaplygin 情形恒为 0"""
        return self.sound_speed_deriv(rho) / self.sound_speed(rho) + 1.0

    @property
    def background_sound_speed_deriv(self) -> float:
        """c̄_s' = c_s'(0)"""
        return float(self.sound_speed_deriv(0.0))

    # ==================== Riemann potential ====================
    def riemann_potential(self, rho: ArrayLike) -> np.ndarray:
        """F(ϱ) = ∫₀^ϱ c_s(s) ds"""
        rho = self._check_rho(rho)
        if self.kind is EOSKind.POLYTROPIC:
            k = 0.5 * (self.gamma - 1.0)
            return np.expm1(k * rho) / k
        if self.kind is EOSKind.CHAPLYGIN:
            return -np.expm1(-rho)
        return self._F_interp(rho) - self._F0

    def inverse_riemann_potential(self, w: ArrayLike) -> np.ndarray:
        """F⁻¹(w)；结果超出 [-1, 1] 时抛出 EOSDomainError"""
        w = np.asarray(w, dtype=float)
        if np.any(~np.isfinite(w)):
            raise EOSDomainError("non-finite Riemann potential value")

        if self.kind is EOSKind.POLYTROPIC:
            k = 0.5 * (self.gamma - 1.0)
            arg = k * w
            if np.any(arg <= -1.0):
                raise EOSDomainError("Riemann potential value outside the range of F")
            rho = np.log1p(arg) / k
        elif self.kind is EOSKind.CHAPLYGIN:
            if np.any(w >= 1.0):
                raise EOSDomainError("Riemann potential value outside the range of F")
            rho = -np.log1p(-w)
        else:
            rho = self._invert_table(w)

        return self._check_rho(rho)

    def _invert_table(self, w: np.ndarray) -> np.ndarray:
        lo, hi = -RHO_LIMIT, RHO_LIMIT
        F_lo = float(self._F_interp(lo) - self._F0)
        F_hi = float(self._F_interp(hi) - self._F0)
        if np.any(w < F_lo) or np.any(w > F_hi):
            raise EOSDomainError("Riemann potential value maps outside [-1, 1]")

        flat = w.ravel()
        out = np.empty_like(flat)
        for i, target in enumerate(flat):
            out[i] = brentq(
                lambda r: float(self._F_interp(r)) - self._F0 - target,
                lo, hi, xtol=INVERSE_XTOL,
            )
        return out.reshape(w.shape)

    # ==================== Classification ====================
    def is_chaplygin_degenerate(self) -> bool:
        """在 [-1, 1] 的 64 个采样点上检验 |c_s⁻¹c_s' + 1| ≤ 1e-12"""
        samples = np.linspace(-RHO_LIMIT, RHO_LIMIT, DEGENERACY_SAMPLES)
        return bool(np.all(np.abs(self.genuine_nonlinearity(samples)) <= DEGENERACY_TOL))

    def __repr__(self) -> str:
        if self.kind is EOSKind.POLYTROPIC:
            return f"EquationOfState(kind='polytropic', gamma={self.gamma})"
        return f"EquationOfState(kind='{self.kind.value}')"


def build_eos(kind: str, gamma: float = 3.0, table_path: Optional[Union[str, Path]] = None) -> EquationOfState:
    """按配置构造状态方程"""
    if kind == EOSKind.CUSTOM.value:
        if table_path is None:
            raise ConfigurationError("custom EOS requires a table", ["eos.table_path"])
        return EquationOfState.from_table(table_path)
    return EquationOfState(kind, gamma=gamma)
