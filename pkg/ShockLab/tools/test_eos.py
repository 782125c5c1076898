"""
Equation of State Tests - 状态方程测试

Author: Shock Lab Team
Date: 2026-10-18
"""

import numpy as np
import pytest

from ShockLab.exceptions import ConfigurationError, EOSDomainError
from ShockLab.tools.eos import EquationOfState, build_eos

# ==================== Test Configuration ====================
RHO_SAMPLES = np.linspace(-0.95, 0.95, 41)
FD_STEP = 1e-5


@pytest.fixture
def table_file(tmp_path):
    """γ=3 多方声速的表格版本（未归一化，乘 2）"""
    rho = np.linspace(-1.2, 1.2, 241)
    path = tmp_path / "eos_table.txt"
    np.savetxt(path, np.column_stack([rho, 2.0 * np.exp(rho)]))
    return path


def all_kinds(table_file):
    return [EquationOfState.polytropic(3.0), EquationOfState.polytropic(2.0), EquationOfState.chaplygin(),
            EquationOfState.from_table(table_file)]


class TestSoundSpeed:
    def test_normalized_at_background(self, table_file):
        for eos in all_kinds(table_file):
            assert float(eos.sound_speed(0.0)) == pytest.approx(1.0, abs=1e-12)

    def test_polytropic_gamma3(self):
        eos = EquationOfState.polytropic(3.0)
        assert float(eos.sound_speed(0.1)) == pytest.approx(1.10517, abs=1e-5)
        assert float(eos.sound_speed_deriv(0.0)) == pytest.approx(1.0)

    def test_polytropic_gamma2_deriv(self):
        assert float(EquationOfState.polytropic(2.0).sound_speed_deriv(0.0)) == pytest.approx(0.5)

    def test_chaplygin(self):
        eos = EquationOfState.chaplygin()
        assert float(eos.sound_speed(0.1)) == pytest.approx(0.90484, abs=1e-5)
        np.testing.assert_allclose(eos.sound_speed_deriv(RHO_SAMPLES), -eos.sound_speed(RHO_SAMPLES))

    def test_custom_table_matches_closed_form(self, table_file):
        custom = EquationOfState.from_table(table_file)
        poly = EquationOfState.polytropic(3.0)
        np.testing.assert_allclose(custom.sound_speed(RHO_SAMPLES), poly.sound_speed(RHO_SAMPLES), rtol=1e-5)

    def test_domain_guard(self):
        with pytest.raises(EOSDomainError):
            EquationOfState.polytropic(3.0).sound_speed(np.array([0.0, 1.5]))


class TestRiemannPotential:
    def test_values(self):
        assert float(EquationOfState.polytropic(3.0).riemann_potential(0.05)) == pytest.approx(0.051271, abs=1e-6)
        assert float(EquationOfState.chaplygin().riemann_potential(0.1)) == pytest.approx(0.095163, abs=1e-6)

    def test_derivative_is_sound_speed(self, table_file):
        for eos in all_kinds(table_file)[:3]:
            dF = (eos.riemann_potential(RHO_SAMPLES + FD_STEP) - eos.riemann_potential(RHO_SAMPLES - FD_STEP)) / (2 * FD_STEP)
            np.testing.assert_allclose(dF, eos.sound_speed(RHO_SAMPLES), atol=1e-9)

    def test_inverse(self, table_file):
        for eos in all_kinds(table_file):
            w = eos.riemann_potential(RHO_SAMPLES)
            np.testing.assert_allclose(eos.inverse_riemann_potential(w), RHO_SAMPLES, atol=1e-10)

    def test_inverse_out_of_range(self):
        with pytest.raises(EOSDomainError):
            EquationOfState.chaplygin().inverse_riemann_potential(1.0)


class TestClassification:
    def test_chaplygin_degenerate(self):
        eos = EquationOfState.chaplygin()
        np.testing.assert_allclose(eos.genuine_nonlinearity(RHO_SAMPLES), 0.0, atol=1e-14)
        assert eos.is_chaplygin_degenerate()

    @pytest.mark.parametrize("gamma,expected", [(3.0, 2.0), (2.0, 1.5)])
    def test_polytropic_nondegenerate(self, gamma, expected):
        eos = EquationOfState.polytropic(gamma)
        assert float(eos.genuine_nonlinearity(0.0)) == pytest.approx(expected)
        assert not eos.is_chaplygin_degenerate()


class TestConstruction:
    def test_gamma_one_rejected(self):
        with pytest.raises(ConfigurationError) as err:
            EquationOfState.polytropic(1.0)
        assert "eos.gamma" in err.value.key_paths

    def test_unknown_kind(self):
        with pytest.raises(ConfigurationError):
            EquationOfState("stiffened")

    def test_table_not_increasing(self, tmp_path):
        path = tmp_path / "bad.txt"
        np.savetxt(path, np.column_stack([np.array([-1.0, 0.5, 0.0, 1.0]), np.ones(4)]))
        with pytest.raises(ConfigurationError):
            EquationOfState.from_table(path)

    def test_build_eos(self, table_file):
        assert build_eos("chaplygin").is_chaplygin_degenerate()
        assert repr(build_eos("polytropic", 2.0)) == "EquationOfState(kind='polytropic', gamma=2.0)"
        assert build_eos("custom", table_path=table_file).kind.value == "custom"
