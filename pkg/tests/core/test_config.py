#!/usr/bin/env python3
"""
Configuration tests: TOML loading, key=value overrides, precedence and validation.
"""

import pytest

from sigcode import config
from sigcode.config import ExperimentConfig, load_config, parse_overrides, validate
from sigcode.errors import ConfigError


@pytest.fixture
def toml_file(tmp_path):
    path = tmp_path / "experiment.toml"
    path.write_text(
        'command = "rate"\n'
        "seed = 11\n"
        "\n"
        "[distribution]\n"
        "K = 3\n"
        "epsilon = 0.5\n"
        "nu = 0.4\n"
        "\n"
        "[snr]\n"
        "gamma_db_start = 10.0\n"
        "gamma_db_stop = 30.0\n"
        "gamma_db_step = 10.0\n",
        encoding="utf-8",
    )
    return path


class TestLoadConfig:
    """Defaults < TOML file < overrides"""

    def test_defaults(self):
        """Test: no file and no overrides → dataclass defaults"""
        assert load_config() == ExperimentConfig()

    def test_sections_are_flattened(self, toml_file):
        """Test: keys inside TOML tables land on the config"""
        loaded = load_config(str(toml_file))
        assert loaded.command == "rate"
        assert loaded.K == 3
        assert loaded.epsilon == 0.5
        assert loaded.seed == 11
        assert loaded.gamma_db_values() == [10.0, 20.0, 30.0]

    def test_overrides_win(self, toml_file):
        """Test: key=value beats the file"""
        loaded = load_config(str(toml_file), parse_overrides(["K=4", "epsilon=0.25"]))
        assert loaded.K == 4
        assert loaded.epsilon == 0.25

    def test_string_coercion(self):
        """Test: command-line strings become typed values"""
        loaded = load_config(overrides=parse_overrides([
            "alphabet=-3,-1,1,3", "pmf=0.1,0.4,0.4,0.1", "two_user_optimum=true", "case=2", "own_gain_sq=none",
        ]))
        assert loaded.alphabet == (-3, -1, 1, 3)
        assert loaded.pmf == (0.1, 0.4, 0.4, 0.1)
        assert loaded.two_user_optimum is True
        assert loaded.case == 2
        assert loaded.own_gain_sq is None

    def test_unknown_key(self):
        """Test: unknown key → ConfigError naming it"""
        with pytest.raises(ConfigError, match="colour"):
            load_config(overrides={"colour": "blue"})

    def test_missing_file(self, tmp_path):
        """Test: missing file → ConfigError"""
        with pytest.raises(ConfigError):
            load_config(str(tmp_path / "absent.toml"))

    def test_invalid_toml(self, tmp_path):
        """Test: malformed TOML → ConfigError"""
        path = tmp_path / "bad.toml"
        path.write_text("K = = 3\n", encoding="utf-8")
        with pytest.raises(ConfigError):
            load_config(str(path))

    def test_uninterpretable_value(self):
        """Test: K=two → ConfigError"""
        with pytest.raises(ConfigError):
            load_config(overrides={"K": "two"})

    def test_override_without_equals(self):
        """Test: 'K3' is not key=value"""
        with pytest.raises(ConfigError):
            parse_overrides(["K3"])


class TestGrids:
    """Derived SNR and nu grids"""

    def test_nu_grid_excludes_endpoints(self):
        """Test: step 0.25 → (0.25, 0.5, 0.75)"""
        assert ExperimentConfig(nu_step=0.25).nu_grid() == (0.25, 0.5, 0.75)

    def test_gamma_linear(self):
        """Test: 30 dB → 1000"""
        assert ExperimentConfig(gamma_db=30.0).gamma == pytest.approx(1000.0)


class TestValidate:
    """Every violated constraint is reported, nothing runs"""

    def test_defaults_are_valid(self):
        """Test: default configuration → no violations"""
        assert validate(ExperimentConfig()) == []

    def test_epsilon_zero(self):
        """Test: epsilon = 0 → violation mentioning epsilon"""
        violations = validate(ExperimentConfig(epsilon=0.0))
        assert any("epsilon" in v for v in violations)

    def test_asymmetric_alphabet(self):
        """Test: alphabet {1, 2} → distribution violation"""
        violations = validate(ExperimentConfig(alphabet=(1, 2)))
        assert any("symmetric" in v for v in violations)

    def test_several_violations_reported_together(self):
        """Test: bad K, nu and output format all listed"""
        violations = validate(ExperimentConfig(K=0, nu=1.5, output_format="xml"))
        assert len(violations) >= 3

    def test_support_cap_for_exact_rate(self):
        """Test: 2^20 signatures with mode=exact → points at sampled mode"""
        violations = validate(ExperimentConfig(command="rate", K=20, n=2))
        assert any("SIGCODE_SUPPORT_CAP" in v and "sampled" in v for v in violations)
        assert not any("SIGCODE_SUPPORT_CAP" in v for v in validate(ExperimentConfig(command="rate", K=20, mode="sampled")))

    def test_cross_gains_need_own_gain(self):
        """Test: cross gains without own gain, wrong count → violations"""
        violations = validate(ExperimentConfig(n=3, cross_gains_sq=(1.0,)))
        assert any("n-1" in v for v in violations)
        assert any("own_gain_sq" in v for v in violations)

    def test_figures_need_a_name(self):
        """Test: command figures without a figure → violation"""
        assert validate(ExperimentConfig(command="figures"))

    @pytest.mark.parametrize("alias,name", [("fig2", "smg-vs-users"), ("f77", "nu-sweep"), ("f77c", "mg-vs-nu")])
    def test_figure_aliases(self, alias, name):
        """Test: short figure ids resolve to the descriptive names"""
        resolved = load_config(overrides={"command": "figures", "figure": alias})
        assert resolved.figure == name
        assert not any("figure" in v for v in validate(resolved))

    def test_rate_needs_two_users(self):
        """Test: rate with n=1 → violation"""
        assert any("two users" in v for v in validate(ExperimentConfig(command="rate", n=1)))


class TestEnvironment:
    """Process settings read from the environment"""

    def test_caps_are_positive(self):
        """Test: enumeration caps and worker count are positive"""
        assert config.SUPPORT_CAP > 0
        assert config.ENUM_CAP > 0
        assert config.RATE_CAP > 0
        assert config.WORKERS >= 1


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
