"""
Run Reports - 运行报告输出
诊断 CSV、verdict.json、收敛表与 μ⋆ 趋势图

Author: Shock Lab Team
Date: 2026-10-18
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, Optional, Union

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd
import seaborn as sns

from ShockLab.tools.diagnostics import DiagnosticsRecord, MuFit

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (np.floating, float)):
        return None if not np.isfinite(value) else float(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if isinstance(value, Path):
        return str(value)
    return value


def write_record_csv(record: DiagnosticsRecord, path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    record.to_csv(path)
    logger.info(f"✓ Diagnostics record saved: {path} ({len(record)} rows)")
    return path


def write_verdict(verdict: Dict[str, Any], path: PathLike) -> Path:
    """写出 verdict.json（NaN 写为 null，键顺序固定）"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(_jsonable(verdict), f, indent=2, ensure_ascii=False)
    logger.info(f"✓ Verdict saved: {path}")
    return path


def write_table(df: pd.DataFrame, path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(path, index=False, float_format="%.12e")
    logger.info(f"✓ Table saved: {path}")
    return path


# ==================== Figures ====================
def plot_record(
    record: pd.DataFrame,
    output_dir: PathLike,
    delta_star: Optional[float] = None,
    fit: Optional[MuFit] = None,
) -> Dict[str, Path]:
    """
    绘制 μ⋆(t)、梯度增长与涡度 Lipschitz 比值

    Args:
        record: 诊断记录表
        output_dir: 图片输出目录
        delta_star: 可选 δ⋆，绘制 1 - δ⋆t 参考线
        fit: 可选线性拟合结果

    Returns:
        图名到文件路径的映射
    """
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    sns.set_style("whitegrid")
    saved: Dict[str, Path] = {}
    t = record["t"].to_numpy()

    # μ⋆
    plt.figure(figsize=(10, 6))
    plt.plot(t, record["mu_star"], marker="o", markersize=3, linewidth=2, color="#2E86AB", label="mu_star (lattice)")
    if "mu_star_eikonal" in record and record["mu_star_eikonal"].notna().any():
        plt.plot(t, record["mu_star_eikonal"], linestyle="--", linewidth=1.5, color="#A23B72", label="mu_star (eikonal)")
    if delta_star:
        plt.plot(t, 1.0 - delta_star * t, color="gray", linewidth=1, label="1 - delta_star t")
    if fit is not None:
        plt.plot(t, fit.intercept - fit.kappa * t, color="#F18F01", linewidth=1, label=f"fit, kappa={fit.kappa:.4g}")
        plt.axvline(fit.T_obs, color="#F18F01", linestyle=":", linewidth=1)
    plt.ylim(bottom=min(0.0, float(np.nanmin(record["mu_star"]))))
    plt.xlabel("t", fontsize=12)
    plt.ylabel("mu_star", fontsize=12)
    plt.title("Inverse foliation density minimum", fontsize=14, fontweight="bold")
    plt.legend()
    saved["mu_star"] = output_dir / "mu_star.png"
    plt.savefig(saved["mu_star"], dpi=300, bbox_inches="tight")
    plt.close()

    # 梯度增长
    fig, axes = plt.subplots(1, 2, figsize=(14, 5))
    grad0 = float(record["max_grad_v"].iloc[0]) or 1.0
    axes[0].semilogy(t, record["max_grad_v"] / grad0, linewidth=2, color="#C73E1D")
    axes[0].set_title("max|grad v| / initial", fontsize=12)
    axes[0].set_xlabel("t")
    lip0 = float(record["lip_vort"].iloc[0])
    if lip0 > 0:
        axes[1].plot(t, record["lip_vort"] / lip0, linewidth=2, color="#3B1F2B")
    axes[1].set_title("lip(vorticity) / initial", fontsize=12)
    axes[1].set_xlabel("t")
    plt.tight_layout()
    saved["gradients"] = output_dir / "gradient_growth.png"
    plt.savefig(saved["gradients"], dpi=300, bbox_inches="tight")
    plt.close(fig)

    logger.info(f"✓ Figures saved to {output_dir}")
    return saved
