"""
Shock Lab Command Line - 命令行入口
读取运行配置，执行场景或收敛性研究，写出诊断 CSV、verdict.json、图表与终态快照

用法:
    python -m ShockLab.app --config Config/exact_1d_check.env --out Data/Runs/exact --workers 4
    python -m ShockLab.app --config Config/exact_1d_check.env --scenario convergence_study --levels 3

Author: Shock Lab Team
Date: 2026-10-18
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Dict, List, Optional

from colorama import Fore, init

from ShockLab.config import SCENARIOS, RunConfig, get_settings, load_config
from ShockLab.exceptions import ConfigurationError, ShockLabError
from ShockLab.runner import ScenarioRunner, convergence_study, default_output_dir
from ShockLab.tools.euler_field import save_checkpoint
from ShockLab.tools.report import plot_record, write_record_csv, write_table, write_verdict

init(autoreset=True)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERIC = 2


# ==================== Logging ====================
def setup_logging(out_dir: Path, level: str = "INFO"):
    """日志同时写入 <out>/shocklab_run.log 与终端"""
    out_dir.mkdir(parents=True, exist_ok=True)
    root = logging.getLogger()
    for handler in list(root.handlers):
        root.removeHandler(handler)
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.INFO),
        format="%(asctime)s - %(levelname)s - %(message)s",
        handlers=[
            logging.FileHandler(out_dir / "shocklab_run.log", encoding="utf-8"),
            logging.StreamHandler(),
        ],
    )


# ==================== Pipelines ====================
def print_verdict(verdict: Dict[str, Dict]):
    print(Fore.CYAN + "=" * 70)
    print(Fore.CYAN + "Verdict")
    print(Fore.CYAN + "=" * 70)
    colors = {"pass": Fore.GREEN, "fail": Fore.RED, "not_evaluated": Fore.WHITE}
    for key, entry in verdict.items():
        status = entry.get("status", "not_evaluated")
        print(colors.get(status, Fore.WHITE) + f"  {key:<30} {status}")


def run(config: RunConfig, out_dir: Path, workers: int = 1, plot: bool = False, progress: bool = True) -> Dict:
    """
    执行单个场景并写出产物

    Returns:
        摘要字典
    """
    result, verdict, summary = ScenarioRunner(config, workers, progress).run()

    write_record_csv(result.record, out_dir / "diagnostics.csv")
    write_verdict({"summary": summary, "verdict": verdict}, out_dir / "verdict.json")
    save_checkpoint(out_dir / "final_state.bin", result.final_state)
    write_table(result.extras["lattice_table"], out_dir / "lattice_final.csv")
    if plot:
        plot_record(result.frame, out_dir / "figures", summary.get("delta_star"), result.extras.get("fit"))

    print_verdict(verdict)
    if "T_obs" in summary:
        print(Fore.WHITE + f"  T_obs = {summary['T_obs']}, 1/delta_star = {summary['inv_delta_star']}, T_star = {summary['T_star']}")
    if "message" in summary:
        print(Fore.WHITE + f"  {summary['message']}")
    return summary


def run_convergence(config: RunConfig, out_dir: Path, levels: int, workers: int = 1, progress: bool = True) -> Dict:
    table, verdict, summary = convergence_study(config, levels, workers, progress)
    write_table(table, out_dir / "convergence.csv")
    write_verdict({"summary": summary, "verdict": verdict}, out_dir / "verdict.json")
    print_verdict(verdict)
    return summary


# ==================== CLI ====================
def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="shocklab", description="Shock formation lab for 2D barotropic Euler flow")
    parser.add_argument("--config", required=True, help="key=value run configuration file")
    parser.add_argument("--scenario", choices=SCENARIOS, help="override the scenario in the config file")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--workers", type=int, help="FFT worker threads")
    parser.add_argument("--levels", type=int, default=3, help="dyadic levels for convergence_study")
    parser.add_argument("--plot", action="store_true", help="save figures")
    parser.add_argument("--quiet", action="store_true", help="hide progress bars")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    settings = get_settings()
    workers = args.workers or settings.workers

    try:
        if workers < 1:
            raise ConfigurationError("workers must be >= 1", ["--workers"])
        config = load_config(args.config, {"scenario": args.scenario})
        out_dir = Path(args.out) if args.out else default_output_dir(config, settings.output_dir)
        setup_logging(out_dir, settings.log_level)
        logger.info(f"🚀 Scenario {config.scenario} -> {out_dir} (workers={workers})")

        if config.scenario == "convergence_study":
            run_convergence(config, out_dir, args.levels, workers, not args.quiet)
        else:
            run(config, out_dir, workers, args.plot, not args.quiet)
    except ConfigurationError as e:
        logger.error(f"❌ {e}")
        print(Fore.RED + f"Configuration error: {e}")
        return EXIT_CONFIG
    except ShockLabError as e:
        logger.error(f"❌ {e}", exc_info=True)
        print(Fore.RED + f"Numeric failure: {e}")
        return EXIT_NUMERIC

    logger.info("✅ Done")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
