"""
Error Taxonomy - 异常体系
所有模块共享的异常类型；入口程序捕获 ShockLabError 并以非零状态退出

Author: Shock Lab Team
Date: 2026-10-18
"""

from typing import Iterable, List, Optional, Tuple


class ShockLabError(Exception):
    """Base class for every error raised by the package."""


# ==================== Configuration ====================
class ConfigurationError(ShockLabError, ValueError):
    """配置错误，附带出错的键路径（例如 grid.n1）"""

    def __init__(self, message: str, key_paths: Optional[Iterable[str]] = None):
        self.key_paths: List[str] = list(key_paths or [])
        if self.key_paths:
            message = f"{message}: {', '.join(self.key_paths)}"
        super().__init__(message)


class CFLViolation(ConfigurationError):
    """时间步长超过 CFL 上限"""


class EOSDomainError(ShockLabError, ValueError):
    """ϱ 或 Riemann 势的取值超出工作区间"""


# ==================== Numerical failures ====================
class NumericFailure(ShockLabError, RuntimeError):
    """出现 NaN / Inf，记录字段、网格下标与时间"""

    def __init__(self, field: str, index: Tuple[int, ...], t: float = float("nan")):
        self.field = field
        self.index = tuple(int(i) for i in index)
        self.t = t
        super().__init__(f"non-finite value in '{field}' at cell {self.index}, t={t:.6g}")


class RegimeViolation(ShockLabError, RuntimeError):
    """解离开小幅值区域（max|ϱ| 或 λ_max 越界）"""


# ==================== Geometry signals ====================
class GeometryDegenerate(ShockLabError):
    """几何量退化（程函梯度过大或格点切向量退化）；这是信号而不是错误"""


class DegenerateGradientError(ShockLabError, ValueError):
    """|∇u| 过小，无法构造声学标架"""


class InterpolationDomainError(ShockLabError, ValueError):
    """特征线离开周期窗口"""


class ShockCrossed(ShockLabError):
    """μ ≤ 0：特征线已经相交"""


# ==================== Oracles and diagnostics ====================
class PostShockError(ShockLabError, ValueError):
    """在 t ≥ T⋆ 时请求精确解"""


class NoShockSignal(ShockLabError):
    """初始数据处处不压缩，不会形成激波"""


class NotReady(ShockLabError):
    """历史数据或样本不足，诊断暂不可用"""
