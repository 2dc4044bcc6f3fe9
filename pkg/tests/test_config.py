"""
Test configuration manager functionality
"""

import os
import shutil
import tempfile
from pathlib import Path
from unittest.mock import patch

import numpy as np
import pytest

from qspeed.config.manager import ConfigManager, env_key
from qspeed.config.presets import PRESETS, preset_names, preset_values, render_preset
from qspeed.errors import ConfigError


class TestConfigManager:
    """Test configuration management"""

    def setup_method(self):
        """Set up test environment"""
        self.temp_dir = Path(tempfile.mkdtemp())

    def teardown_method(self):
        """Clean up test environment"""
        shutil.rmtree(self.temp_dir, ignore_errors=True)

    def _write(self, text, name="scenario.yaml"):
        path = self.temp_dir / name
        path.write_text(text)
        return path

    def _error(self, text):
        with pytest.raises(ConfigError) as excinfo:
            ConfigManager(self._write(text)).load()
        return excinfo.value

    def test_default_config_structure(self):
        """Test that default configuration has expected structure"""
        config = ConfigManager.DEFAULT_CONFIG

        for section in ("scenario", "initial_state", "source", "evolution", "noise"):
            assert section in config
        assert "observable" in config
        assert "experiment" in config

        assert config["source"]["center_nm"] == 808.0
        assert config["evolution"]["l_step"] == 0.025
        assert config["noise"]["length_lambda"] == 120.0
        assert config["experiment"]["resamples"] == 10000

    def test_defaults_without_file(self):
        """Test loading with no scenario file"""
        cfg = ConfigManager().load()
        assert cfg["initial_state.name"] == "plus"
        assert cfg["source.kind"] == "monochromatic"
        assert len(cfg.l_grid()) == 41
        assert cfg.unitary
        assert cfg.hamiltonian() is not None

    def test_initialize_scenario(self):
        """Test writing and reading back a preset"""
        target = self.temp_dir / "bell.yaml"
        ConfigManager().initialize_scenario("bell", target)
        assert target.read_text().startswith("# qspeed scenario:")

        cfg = ConfigManager(target).load()
        assert cfg.name == "bell"
        assert cfg["source.kind"] == "correlated"
        assert cfg["experiment.rate_hz"] == 7200.0
        assert cfg["scenario.reference_max_speed"] == pytest.approx(4.981)
        assert cfg.output_dir == Path("results/bell")
        assert not cfg.unitary
        assert cfg.hamiltonian() is None

    def test_initialize_scenario_force(self):
        """Test forced scenario initialization"""
        target = self.temp_dir / "p.yaml"
        ConfigManager().initialize_scenario("p", target)

        with pytest.raises(ConfigError, match="already exists"):
            ConfigManager().initialize_scenario("p", target)

        ConfigManager().initialize_scenario("pp", target, force=True)
        assert ConfigManager(target).load()["initial_state.name"] == "PN"

    def test_unknown_preset(self):
        """Test that unknown presets are rejected"""
        with pytest.raises(ConfigError, match="unknown preset"):
            ConfigManager().initialize_scenario("w_state", self.temp_dir / "w.yaml")

    @pytest.mark.parametrize("preset", preset_names())
    def test_presets_round_trip(self, preset):
        """Test that every rendered preset loads to its values"""
        path = self._write(render_preset(preset), f"{preset}.yaml")
        cfg = ConfigManager(path).load()
        for key, value in preset_values(preset).items():
            assert cfg[key] == value

    @pytest.mark.parametrize("preset", preset_names())
    def test_shipped_scenarios_match_presets(self, preset):
        """Test that scenarios/ holds the rendered presets"""
        shipped = Path(__file__).resolve().parent.parent / "scenarios" / f"{preset}.yaml"
        assert shipped.read_text(encoding="utf-8") == render_preset(preset)

    def test_seven_presets(self):
        """Test the preset catalogue"""
        assert preset_names() == ["plus", "plus_plus", "bell", "p", "pp", "p_noise", "pp_noise"]
        assert all("title" in preset for preset in PRESETS.values())

    def test_nested_keys(self):
        """Test the nested YAML form"""
        path = self._write("source:\n  kind: decorrelated\n  filter_fwhm_nm: 3\n")
        cfg = ConfigManager(path).load()
        assert cfg["source.kind"] == "decorrelated"
        assert cfg["source.filter_fwhm_nm"] == 3.0
        assert cfg.name == "scenario"

    def test_environment_variable_override(self):
        """Test that environment variables override config values"""
        path = self._write("source.center_nm: 800\n")
        with patch.dict(os.environ, {"QSPEED_SOURCE_CENTER_NM": "810"}):
            assert ConfigManager(path).get_config("source.center_nm") == 810.0
        assert env_key("experiment.master_seed") == "QSPEED_EXPERIMENT_MASTER_SEED"

    def test_environment_error_names_variable(self):
        """Test errors raised by environment overrides"""
        with patch.dict(os.environ, {"QSPEED_EVOLUTION_WORKERS": "many"}):
            with pytest.raises(ConfigError, match="QSPEED_EVOLUTION_WORKERS"):
                ConfigManager().load()
        with patch.dict(os.environ, {"QSPEED_EVOLUTION_WORKERS": "0"}):
            with pytest.raises(ConfigError) as excinfo:
                ConfigManager(self._write("evolution.workers: 2\n")).load()
        assert excinfo.value.line is None
        assert "environment QSPEED_EVOLUTION_WORKERS" in str(excinfo.value)

    def test_type_conversion(self):
        """Test automatic type conversion for known config keys"""
        path = self._write(
            "evolution.workers: '4'\n"
            "experiment.enabled: 'yes'\n"
            "initial_state.name: custom\n"
            "initial_state.amplitudes: '0.6, 0.8j'\n"
        )
        cfg = ConfigManager(path).load()
        assert cfg.workers == 4
        assert cfg.experiment_enabled is True
        assert np.allclose(cfg.initial_ket().amplitudes, [0.6, 0.8j])

    def test_errors_carry_line_numbers(self):
        """Test that file errors point at the offending line"""
        error = self._error("initial_state.name: plus\nsource.colour: red\n")
        assert error.key == "source.colour"
        assert error.line == 2
        assert str(error).startswith("line 2: source.colour")

        error = self._error("initial_state.name: plus\nevolution.workers: four\n")
        assert error.key == "evolution.workers"
        assert error.line == 2

    def test_invalid_yaml(self):
        """Test YAML syntax errors"""
        error = self._error("source.kind: [monochromatic\n")
        assert error.key == "config"
        assert error.line is not None

    def test_top_level_must_be_mapping(self):
        """Test rejection of a list document"""
        assert self._error("- plus\n- bell\n").key == "config"

    def test_missing_file(self):
        """Test a scenario file that does not exist"""
        with pytest.raises(ConfigError, match="file not found"):
            ConfigManager(self.temp_dir / "nope.yaml").load()

    @pytest.mark.parametrize(
        "text,key",
        [
            ("initial_state.name: plusX\n", "initial_state.name"),
            ("initial_state.name: plus\nsource.kind: correlated\n", "source.kind"),
            ("source.kind: laser\n", "source.kind"),
            ("source.kind: decorrelated\nsource.filter_fwhm_nm: 0\n", "source.filter_fwhm_nm"),
            ("evolution.l_start: 1\nevolution.l_stop: 0.5\n", "evolution.l_stop"),
            ("evolution.rho_dot: analytic\nnoise.enabled: true\n", "evolution.rho_dot"),
            ("evolution.nodes_per_axis: 8\n", "evolution.nodes_per_axis"),
            ("noise.axis: y\n", "noise.axis"),
            ("observable.kind: custom\n", "observable.matrix_file"),
            ("experiment.prep_infidelity: 1.0\n", "experiment.prep_infidelity"),
            (
                "initial_state.name: plusN\ninitial_state.n: 5\nexperiment.enabled: true\n",
                "experiment.enabled",
            ),
            ("initial_state.name: bell\ninitial_state.n: 3\n", "initial_state.n"),
            (
                "initial_state.name: plusN\ninitial_state.n: 2\n"
                "source.kind: correlated\nsource.pump_fwhm_nm: 10\n",
                "source.pump_fwhm_nm",
            ),
        ],
    )
    def test_validation_names_key(self, text, key):
        """Test that validation errors name the offending key"""
        assert self._error(text).key == key

    def test_custom_observable(self):
        """Test an observable matrix relative to the scenario file"""
        (self.temp_dir / "sx.txt").write_text("0 1\n1 0\n")
        path = self._write("observable.kind: custom\nobservable.matrix_file: sx.txt\n")
        observable = ConfigManager(path).load().observable()
        assert np.allclose(observable.entries, [[0, 1], [1, 0]])

        error = self._error(
            "initial_state.name: plusN\ninitial_state.n: 2\n"
            "observable.kind: custom\nobservable.matrix_file: sx.txt\n"
        )
        assert error.key == "observable.matrix_file"

    def test_flatten_dict(self):
        """Test dictionary flattening functionality"""
        nested_dict = {"level1": {"level2": {"key": "value"}, "simple": "test"}, "root": "data"}

        flattened = ConfigManager()._flatten_dict(nested_dict)
        expected = {"level1.level2.key": "value", "level1.simple": "test", "root": "data"}

        assert flattened == expected

    def test_get_all_config(self):
        """Test getting all configuration as flattened dict"""
        path = self._write("initial_state.name: P\n")
        manager = ConfigManager(path)

        all_config = manager.get_all_config()

        assert all_config["initial_state.name"] == "P"
        assert "experiment.master_seed" in all_config
        assert manager.get_config("nonexistent.key", "default") == "default"

    def test_scenario_and_experiment(self):
        """Test the objects built from a configuration"""
        path = self._write(
            "initial_state.name: PP\n"
            "source.kind: correlated\n"
            "noise.enabled: true\n"
            "experiment.resamples: 100\n"
        )
        cfg = ConfigManager(path).load()
        scenario = cfg.scenario()
        assert scenario.n_qubits == 2
        assert len(scenario.noise) == 1
        assert scenario.noise[0].length == 120.0
        assert cfg.experiment().resamples == 100
