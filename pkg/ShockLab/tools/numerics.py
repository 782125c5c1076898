"""
Periodic Numerics - 周期网格数值工具
中心差分模板、谱滤波器与周期 B 样条插值

Author: Shock Lab Team
Date: 2026-10-18
"""

import logging
from typing import Dict, Sequence, Tuple

import numpy as np
from scipy import fft, ndimage

from ShockLab.exceptions import ConfigurationError, InterpolationDomainError

logger = logging.getLogger(__name__)

# ==================== Stencils ====================
# 中心差分系数：df ≈ Σ c_k (f[i+k] - f[i-k]) / h
CENTERED_COEFFS: Dict[int, Tuple[float, ...]] = {
    2: (1.0 / 2.0,),
    4: (2.0 / 3.0, -1.0 / 12.0),
    6: (3.0 / 4.0, -3.0 / 20.0, 1.0 / 60.0),
}

FILTER_CUTOFF = 2.0 / 3.0
FILTER_POWER = 8


def periodic_derivative(f: np.ndarray, h: float, axis: int, order: int = 6) -> np.ndarray:
    """
    周期中心差分一阶导数

    Args:
        f: 周期数组
        h: 网格间距
        axis: 求导方向
        order: 精度阶数（2、4 或 6）

    Returns:
        与 f 同形状的导数数组
    """
    if order not in CENTERED_COEFFS:
        raise ConfigurationError(f"unsupported stencil order {order}", ["run.stencil_order"])

    df = np.zeros_like(f, dtype=float)
    for k, c in enumerate(CENTERED_COEFFS[order], start=1):
        df += c * (np.roll(f, -k, axis=axis) - np.roll(f, k, axis=axis))
    return df / h


def periodic_antiderivative(df: np.ndarray, length: float) -> np.ndarray:
    """零均值周期原函数（谱积分），df 的均值被丢弃"""
    n = df.shape[0]
    coeffs = fft.rfft(df)
    k = 2.0 * np.pi * fft.rfftfreq(n, d=length / n)
    out = np.zeros_like(coeffs)
    out[1:] = coeffs[1:] / (1j * k[1:])
    return fft.irfft(out, n=n)


# ==================== Spectral filter ====================
def filter_response(eta: np.ndarray, strength: float) -> np.ndarray:
    """σ(η)：η ≤ 2/3 时为 1，高三分之一模态指数衰减"""
    sigma = np.ones_like(eta, dtype=float)
    high = eta > FILTER_CUTOFF
    scaled = (eta[high] - FILTER_CUTOFF) / (1.0 - FILTER_CUTOFF)
    sigma[high] = np.exp(-strength * scaled ** FILTER_POWER)
    return sigma


class SpectralFilter:
    """二维周期指数滤波器（作用于最后两个轴）"""

    def __init__(self, n1: int, n2: int, strength: float, workers: int = 1):
        if strength < 0:
            raise ConfigurationError("filter strength must be non-negative", ["run.filter_strength"])
        self.strength = strength
        self.workers = workers

        eta1 = np.abs(fft.fftfreq(n1) * n1) / (n1 // 2)
        eta2 = fft.rfftfreq(n2) * n2 / (n2 // 2)
        self._mask = filter_response(eta1, strength)[:, None] * filter_response(eta2, strength)[None, :]

    def apply(self, f: np.ndarray) -> np.ndarray:
        if self.strength == 0.0:
            return f
        spec = fft.rfft2(f, workers=self.workers)
        return fft.irfft2(spec * self._mask, s=f.shape, workers=self.workers)


# ==================== Interpolation ====================
SPLINE_ORDER = 5
# 截断行带两端的样条系数误差按 0.43^k 衰减
CROP_MARGIN = 48


class PeriodicSampler:
    """
    周期网格上的 B 样条插值（默认五次）
    x¹ 使用未折叠坐标，离开窗口时报错；x² 在环面上自由折叠。
    点集只占窗口一小段时，只对覆盖它的 x¹ 行带做样条预滤波。
    """

    def __init__(
        self, x1_offset: float, L1: float, L2: float, n1: int, n2: int,
        spline_order: int = SPLINE_ORDER, crop_margin: int = CROP_MARGIN,
    ):
        if spline_order not in (1, 3, 5):
            raise ConfigurationError(f"unsupported spline order {spline_order}", ["spline_order"])
        self.x1_offset = x1_offset
        self.L1 = L1
        self.L2 = L2
        self.n1 = n1
        self.h1 = L1 / n1
        self.h2 = L2 / n2
        self.spline_order = spline_order
        self.crop_margin = crop_margin

    def indices(self, x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        outside = (x1 < self.x1_offset) | (x1 >= self.x1_offset + self.L1) | ~np.isfinite(x1)
        if np.any(outside):
            bad = x1[outside].ravel()[0]
            raise InterpolationDomainError(
                f"characteristic at x1={bad:.6g} left the window "
                f"[{self.x1_offset}, {self.x1_offset + self.L1})"
            )
        i1 = (x1 - self.x1_offset) / self.h1
        i2 = np.mod(x2, self.L2) / self.h2
        return np.stack([i1.ravel(), i2.ravel()])

    def row_band(self, coords: np.ndarray) -> Tuple[int, int]:
        """覆盖点集的 x¹ 行区间 [lo, hi)；带宽超出窗口时返回全部行"""
        lo = int(np.floor(np.min(coords[0]))) - self.crop_margin
        hi = int(np.ceil(np.max(coords[0]))) + self.crop_margin + 1
        if lo < 0 or hi > self.n1:
            return 0, self.n1
        return lo, hi

    def sample(self, fields: Sequence[np.ndarray], x1: np.ndarray, x2: np.ndarray) -> Tuple[np.ndarray, ...]:
        """在点集 (x1, x2) 上同时插值多个网格字段"""
        coords = self.indices(x1, x2)
        shape = np.shape(x1)
        lo, hi = self.row_band(coords)
        coords[0] -= lo
        return tuple(
            ndimage.map_coordinates(f[lo:hi], coords, order=self.spline_order, mode="grid-wrap").reshape(shape)
            for f in fields
        )
