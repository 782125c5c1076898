"""
Run Configuration and Settings - 运行配置与环境设置
解析 key=value 运行配置文件（dotenv 格式），pydantic 校验，并提供进程级设置单例

Author: Shock Lab Team
Date: 2026-10-18
"""

import logging
from pathlib import Path
from typing import Any, Dict, Literal, Optional, Union

from dotenv import dotenv_values, load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from ShockLab.exceptions import ConfigurationError

logger = logging.getLogger(__name__)

# Load environment variables
load_dotenv()

SCENARIOS = ("exact_1d_check", "baseline_shock", "vorticity_shock", "chaplygin_control", "convergence_study")
SECTIONS = ("eos", "grid", "data", "run", "output")


# ==================== Process Settings ====================
class Settings(BaseSettings):
    """进程级设置（环境变量前缀 SHOCKLAB_）"""

    model_config = SettingsConfigDict(env_prefix="SHOCKLAB_", env_file=".env", extra="ignore")

    output_dir: Path = Path("Data/Runs")
    workers: int = Field(default=1, ge=1)
    log_level: str = "INFO"


_settings: Optional[Settings] = None


def get_settings() -> Settings:
    """获取设置单例"""
    global _settings
    if _settings is None:
        _settings = Settings()
    return _settings


# ==================== Run Config Sections ====================
class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class EosSection(_Section):
    kind: Literal["polytropic", "chaplygin", "custom"]
    gamma: float = 3.0
    table_path: Optional[Path] = None

    @model_validator(mode="after")
    def _check_gamma(self):
        if self.kind == "polytropic" and (self.gamma <= 0 or self.gamma == 1):
            raise ValueError("gamma must be > 0 and != 1")
        if self.kind == "custom" and self.table_path is None:
            raise ValueError("table_path is required for a custom EOS")
        return self


class GridSection(_Section):
    n1: int = Field(ge=16, multiple_of=2)
    n2: int = Field(default=16, ge=16, multiple_of=2)
    L1: float = Field(gt=0)
    L2: float = 1.0
    x1_offset: float = -3.0

    @model_validator(mode="after")
    def _check_torus(self):
        if self.L2 != 1.0:
            raise ValueError("L2 must be 1 (unit torus)")
        return self


class DataSection(_Section):
    amplitude: float = Field(ge=0)
    profile: Literal["sine", "bump"] = "sine"
    window: Literal["smoothstep5", "cinf", "none"] = "smoothstep5"
    window_width: float = Field(default=0.1, gt=0, le=0.5)
    vorticity_lambda: float = Field(default=0.0, ge=0)
    vorticity_profile: Literal["none", "tanh_ramp"] = "none"
    ramp_start: float = -1.0
    ramp_end: Optional[float] = None
    ramp_width: float = Field(default=0.25, gt=0)


class RunSection(_Section):
    t_max: float = Field(gt=0)
    cfl: float = Field(default=0.4, gt=0, le=1)
    filter_strength: float = Field(default=1e-2, ge=0)
    mu_stop: float = 0.05
    stencil_order: int = 6
    output_every: int = Field(default=10, ge=1)
    n_u: int = Field(default=64, ge=8)
    n_theta: int = Field(default=16, ge=8)
    U0: float = Field(default=1.0, gt=0, le=1)
    speed_bound: float = Field(default=3.0, ge=1, le=3)

    @field_validator("stencil_order")
    @classmethod
    def _check_order(cls, value: int) -> int:
        if value not in (2, 4, 6):
            raise ValueError("stencil_order must be 2, 4 or 6")
        return value


class OutputSection(_Section):
    dir: Optional[Path] = None


class RunConfig(BaseModel):
    """一次运行的全部配置"""

    model_config = ConfigDict(extra="forbid")

    scenario: Literal[
        "exact_1d_check", "baseline_shock", "vorticity_shock", "chaplygin_control", "convergence_study"
    ]
    eos: EosSection
    grid: GridSection
    data: DataSection
    run: RunSection
    output: OutputSection = OutputSection()

    @property
    def ramp(self):
        end = self.data.ramp_end if self.data.ramp_end is not None else self.run.t_max + 1.0
        return (self.data.ramp_start, end)


# ==================== Loading ====================
def _nest(flat: Dict[str, Any]) -> Dict[str, Any]:
    """grid.n1=... → {"grid": {"n1": ...}}"""
    nested: Dict[str, Any] = {name: {} for name in SECTIONS}
    for key, value in flat.items():
        if value is None or value == "":
            continue
        if "." in key:
            section, name = key.split(".", 1)
            nested.setdefault(section, {})[name] = value
        else:
            nested[key] = value
    return nested


def _key_paths(err: ValidationError) -> list:
    paths = []
    for item in err.errors():
        loc = [str(p) for p in item["loc"] if not str(p).startswith(("function-after", "literal"))]
        path = ".".join(loc) or "<root>"
        if path not in paths:
            paths.append(path)
    return paths


def build_config(values: Dict[str, Any]) -> RunConfig:
    """从扁平或嵌套字典构造 RunConfig；失败时列出所有出错的键路径"""
    try:
        config = RunConfig.model_validate(_nest(values))
    except ValidationError as e:
        details = "; ".join(f"{'.'.join(map(str, x['loc']))}: {x['msg']}" for x in e.errors())
        logger.debug(details)
        raise ConfigurationError("invalid run configuration", _key_paths(e)) from e

    check_cross_keys(config)
    return config


def load_config(path: Union[str, Path], overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    """
    读取 key=value 运行配置文件

    Args:
        path: 配置文件路径
        overrides: 命令行覆盖项（扁平键）

    Returns:
        校验后的 RunConfig
    """
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"config file not found: {path}", ["--config"])

    values: Dict[str, Any] = dict(dotenv_values(path))
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    config = build_config(values)
    logger.info(f"✓ Loaded run config: {path} (scenario={config.scenario})")
    return config


def check_cross_keys(config: RunConfig, t_end: Optional[float] = None):
    """跨键约束：μ_stop ∈ (0, 0.5)，L1 ≥ 2 + speed_bound·t_end（默认 t_end = run.t_max）"""
    if not 0.0 < config.run.mu_stop < 0.5:
        raise ConfigurationError("run.mu_stop must lie in (0, 0.5)", ["run.mu_stop"])
    t_end = config.run.t_max if t_end is None else t_end
    bound = config.run.speed_bound
    if config.grid.L1 < 2.0 + bound * t_end:
        raise ConfigurationError(
            f"no-wrap rule violated: grid.L1 must be >= 2 + {bound:g}*{t_end:g} = {2.0 + bound * t_end:g}",
            ["grid.L1", "run.t_max", "run.speed_bound"],
        )
