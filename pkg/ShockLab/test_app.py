"""
Run Config and CLI Tests - 运行配置与命令行测试

Author: Shock Lab Team
Date: 2026-10-18
"""

import json
import math
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from ShockLab.app import EXIT_CONFIG, EXIT_OK, main
from ShockLab.config import build_config, load_config
from ShockLab.exceptions import ConfigurationError
from ShockLab.runner import (
    GXX_DRIFT_RATE_TOL,
    VERDICT_KEYS,
    ScenarioRunner,
    _order_ok,
    convergence_study,
    frame_verdict,
    observed_orders,
    vorticity_verdict,
)

# ==================== Test Configuration ====================
SMALL_RUN = {
    "scenario": "exact_1d_check",
    "eos.kind": "polytropic",
    "eos.gamma": "3.0",
    "grid.n1": "128",
    "grid.n2": "16",
    "grid.L1": "3.0",
    "grid.x1_offset": "-1.0",
    "data.amplitude": "0.01",
    "run.t_max": "0.2",
    "run.n_u": "16",
    "run.n_theta": "8",
    "run.output_every": "2",
}
CONFIG_DIR = Path(__file__).resolve().parent.parent / "Config"


def write_config(path, values):
    path.write_text("\n".join(f"{k}={v}" for k, v in values.items()) + "\n", encoding="utf-8")
    return path


class TestRunConfig:
    def test_empty_config_lists_required_keys(self):
        with pytest.raises(ConfigurationError) as err:
            build_config({})
        for key in ("scenario", "eos.kind", "grid.n1", "grid.L1", "data.amplitude", "run.t_max"):
            assert key in err.value.key_paths

    def test_flat_keys_are_parsed(self):
        config = build_config(SMALL_RUN)
        assert config.grid.n1 == 128 and config.grid.x1_offset == -1.0
        assert config.data.window == "smoothstep5"
        assert config.run.mu_stop == 0.05

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigurationError) as err:
            build_config({**SMALL_RUN, "grid.n3": "8"})
        assert "grid.n3" in err.value.key_paths

    def test_no_wrap_rule(self):
        with pytest.raises(ConfigurationError) as err:
            build_config({**SMALL_RUN, "grid.L1": "2.5"})
        assert err.value.key_paths == ["grid.L1", "run.t_max", "run.speed_bound"]

    @pytest.mark.parametrize("mu_stop", ["0.0", "0.5"])
    def test_mu_stop_range(self, mu_stop):
        with pytest.raises(ConfigurationError) as err:
            build_config({**SMALL_RUN, "run.mu_stop": mu_stop})
        assert err.value.key_paths == ["run.mu_stop"]

    def test_speed_bound_relaxes_window(self):
        config = build_config({**SMALL_RUN, "grid.L1": "2.25", "run.speed_bound": "1.1"})
        assert config.run.speed_bound == 1.1

    @pytest.mark.parametrize("name", [
        "exact_1d_check", "exact_1d_fine", "baseline_shock", "vorticity_shock", "chaplygin_control",
        "convergence_study", "convergence_vorticity",
    ])
    def test_shipped_configs_load(self, name):
        config = load_config(CONFIG_DIR / f"{name}.env")
        assert config.grid.L1 / config.grid.n1 <= 1.0 / 64

    def test_load_with_override(self, tmp_path):
        path = write_config(tmp_path / "run.env", SMALL_RUN)
        assert load_config(path, {"scenario": "baseline_shock"}).scenario == "baseline_shock"

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigurationError):
            load_config(tmp_path / "absent.env")


class TestCli:
    def test_bad_config_exit_code(self, tmp_path):
        path = write_config(tmp_path / "bad.env", {**SMALL_RUN, "grid.n1": "17"})
        assert main(["--config", str(path), "--out", str(tmp_path / "out"), "--quiet"]) == EXIT_CONFIG

    @pytest.mark.slow
    def test_small_run_writes_artifacts(self, tmp_path):
        path = write_config(tmp_path / "run.env", SMALL_RUN)
        out = tmp_path / "out"
        assert main(["--config", str(path), "--out", str(out), "--quiet"]) == EXIT_OK

        df = pd.read_csv(out / "diagnostics.csv")
        assert df["t"].iloc[0] == 0.0
        assert df["t"].iloc[-1] == pytest.approx(0.2)
        assert df["t"].is_monotonic_increasing
        assert df["key_product_err"].max() <= 1e-3
        assert df["vort_source_err"].dropna().max() <= 1e-10
        assert np.isfinite(df["null_form_max"]).all()
        assert (df["max_grad_v1"] <= df["max_grad_v"] + 1e-12).all()

        verdict = json.loads((out / "verdict.json").read_text(encoding="utf-8"))
        assert set(verdict) == {"summary", "verdict"}
        assert list(verdict["verdict"]) == list(VERDICT_KEYS)
        worst = verdict["summary"]["worst_characteristic"]
        assert set(worst) == {"x1", "x2", "u", "theta", "mu", "L1_small", "L2_small"}
        assert worst["mu"] == pytest.approx(df["mu_star"].iloc[-1])
        for path_name in ("final_state.bin", "lattice_final.csv", "shocklab_run.log"):
            assert (out / path_name).exists()


class TestVerdicts:
    def test_frame_verdict_checks_lattice_drift(self):
        rows = {"frame_identity_err": [1e-12, 2e-12], "lattice_gXX_drift": [0.0, 2.0 * GXX_DRIFT_RATE_TOL]}
        verdict = frame_verdict(pd.DataFrame(rows))
        assert verdict["status"] == "fail"
        assert verdict["gXX_drift_rate"] == 2.0 * GXX_DRIFT_RATE_TOL
        rows["lattice_gXX_drift"] = [0.0, 1e-7]
        assert frame_verdict(pd.DataFrame(rows))["status"] == "pass"

    def test_vorticity_growth_on_worst_characteristic(self):
        df = pd.DataFrame({
            "lip_vort": [0.4, 0.8], "max_grad_v": [0.09, 1.3], "grad_v_seed_worst": [0.063, 0.063],
            "vort_worst": [1e-3, 1e-3],
        })
        verdict = vorticity_verdict(df, 0.05)
        assert verdict["status"] == "pass"
        assert verdict["grad_growth"] == pytest.approx(1.3 / 0.063)
        assert verdict["grad_growth_global"] == pytest.approx(1.3 / 0.09)

    def test_vanishing_residuals_are_not_evaluated(self):
        assert _order_ok([0.0, 0.0, 0.0], [math.nan, math.nan], 3.5) is None
        assert _order_ok([1e-3, 1e-4, 1e-5], [3.3, 3.3], 3.5) is False
        assert _order_ok([1.6e-3, 1e-4, 6.25e-6], [4.0, 4.0], 3.5) is True


class TestConvergenceStudy:
    def test_observed_orders(self):
        orders = observed_orders([1e-2, 1.25e-3, 1.5625e-4, 0.0])
        assert orders[:2] == pytest.approx([3.0, 3.0])
        assert math.isnan(orders[2])

    def test_needs_three_levels(self):
        config = build_config({**SMALL_RUN, "scenario": "convergence_study"})
        with pytest.raises(ConfigurationError) as err:
            convergence_study(config, levels=2, progress=False)
        assert err.value.key_paths == ["--levels"]

    @pytest.mark.slow
    def test_plane_wave_study_converges(self):
        config = load_config(CONFIG_DIR / "convergence_study.env", {"run.t_max": "0.5"})
        table, verdict, summary = convergence_study(config, levels=3, progress=False)
        assert table["n1"].tolist() == [512, 1024, 2048]
        assert verdict["9_dual_route_mu"]["status"] == "pass"
        residuals = verdict["7_reformulation_residuals"]
        assert residuals["status"] == "pass"
        assert residuals["not_evaluated"] == ["res_wave_v2", "res_transport"]
        assert summary["solution_order_ok"]

    @pytest.mark.slow
    def test_vorticity_study_evaluates_every_residual(self):
        config = load_config(CONFIG_DIR / "convergence_vorticity.env", {"run.t_max": "0.5"})
        table, verdict, summary = convergence_study(config, levels=3, progress=False)
        assert summary["vorticity_lambda"] == 0.001
        assert (table["res_wave_v2"] > 0).all() and (table["res_transport"] > 0).all()
        residuals = verdict["7_reformulation_residuals"]
        assert residuals["not_evaluated"] == []
        assert residuals["status"] == "pass"
        assert verdict["9_dual_route_mu"]["status"] == "pass"


@pytest.mark.slow
class TestAcceptanceRuns:
    """随附配置的完整运行（分钟级）"""

    @staticmethod
    def scenario(name):
        return ScenarioRunner(load_config(CONFIG_DIR / f"{name}.env"), progress=False).run()

    def test_exact_plane_wave(self):
        result, verdict, summary = self.scenario("exact_1d_check")
        assert summary["stop_reason"] == "mu_stop"
        for key in ("1_lifespan_vs_delta_star", "3_linear_mu_vanishing", "4_blowup_rate",
                    "8_frame_identities", "10_hierarchy"):
            assert verdict[key]["status"] == "pass", (key, verdict[key])
        assert verdict["3_linear_mu_vanishing"]["max_residual"] <= 0.02
        assert result.lattice.gxx_drift_rate <= GXX_DRIFT_RATE_TOL

    def test_fine_plane_wave_crossing_time(self):
        _, verdict, summary = self.scenario("exact_1d_fine")
        assert verdict["2_lifespan_vs_crossing_time"]["status"] == "pass", verdict["2_lifespan_vs_crossing_time"]
        assert abs(summary["T_obs"] - summary["T_star"]) / summary["T_star"] <= 0.01

    def test_vorticity_stays_lipschitz(self):
        result, verdict, summary = self.scenario("vorticity_shock")
        assert summary["stop_reason"] == "mu_stop"
        assert verdict["5_vorticity_regularity"]["status"] == "pass", verdict["5_vorticity_regularity"]
        assert abs(result.frame["max_grad_v2"].iloc[-1]) > 0.0
        df = result.frame
        assert df.loc[df["mu_star"] >= 0.5, "mu_dual_rel"].dropna().max() <= 1e-2

    def test_chaplygin_has_no_shock(self):
        _, verdict, summary = self.scenario("chaplygin_control")
        assert verdict["6_chaplygin_control"]["status"] == "pass"
        assert summary["min_mu_star"] >= 0.9
