"""
Test scenario runs and result files
"""

import csv
import json
import shutil
import tempfile
from pathlib import Path
from unittest.mock import patch

import numpy as np
import pytest

from qspeed.config.manager import ConfigManager
from qspeed.config.presets import preset_names
from qspeed.core.file_manager import FileManager, format_value, load_matrix
from qspeed.core.pipeline import (
    EXPERIMENT_COLUMNS,
    TRAJECTORY_COLUMNS,
    run_trajectory,
    run_virtual_experiment,
    sweep_n,
)
from qspeed.errors import ConfigError, DimensionError, NumericalInvariantError


def _read_csv(path):
    with open(path, newline="", encoding="utf-8") as f:
        return list(csv.reader(f))


class TestFileManager:
    """Test result file writing"""

    def setup_method(self):
        """Set up test environment"""
        self.temp_dir = Path(tempfile.mkdtemp())

    def teardown_method(self):
        """Clean up test environment"""
        shutil.rmtree(self.temp_dir, ignore_errors=True)

    def test_format_value(self):
        """Test CSV cell formatting"""
        assert format_value(None) == ""
        assert format_value(True) == "true"
        assert format_value(np.int64(3)) == "3"
        assert format_value(0.1) == "0.10000000000000001"

    def test_write_csv_and_json(self):
        """Test CSV and JSON output in a new directory"""
        files = FileManager(self.temp_dir / "out")
        csv_path = files.write_csv("t.csv", ["a", "b"], [[1, None], [0.5, 2.0]])
        json_path = files.write_json("s.json", {"b": 1, "a": None})
        assert csv_path.read_text() == "a,b\n1,\n0.5,2\n"
        assert json_path.read_text() == '{\n  "a": null,\n  "b": 1\n}\n'
        assert sorted(p.name for p in (self.temp_dir / "out").iterdir()) == ["s.json", "t.csv"]

    def test_load_matrix(self):
        """Test reading a complex observable"""
        path = self.temp_dir / "a.txt"
        path.write_text("# sigma_y\n0 -1j\n1j 0\n")
        observable = load_matrix(path)
        assert np.allclose(observable.entries, [[0, -1j], [1j, 0]])

    def test_load_matrix_errors(self):
        """Test missing and non-Hermitian matrix files"""
        with pytest.raises(ConfigError, match="not found"):
            load_matrix(self.temp_dir / "missing.txt")
        path = self.temp_dir / "b.txt"
        path.write_text("0 1\n0 0\n")
        with pytest.raises(ConfigError):
            load_matrix(path)


class TestRunTrajectory:
    """Test trajectory runs of the presets"""

    def setup_method(self):
        """Set up test environment"""
        self.temp_dir = Path(tempfile.mkdtemp())

    def teardown_method(self):
        """Clean up test environment"""
        shutil.rmtree(self.temp_dir, ignore_errors=True)

    def _config(self, preset, **overrides):
        path = self.temp_dir / f"{preset}.yaml"
        if not path.exists():
            ConfigManager().initialize_scenario(preset, path)
        cfg = ConfigManager(path).load()
        cfg.values["output_dir"] = str(self.temp_dir / "out" / preset)
        cfg.values.update(overrides)
        return cfg

    def test_monochromatic_plus(self):
        """Test the unitary |+> trajectory and its files"""
        cfg = self._config("plus", **{"source.kind": "monochromatic"})
        result = run_trajectory(cfg)
        summary = result.summary
        assert summary["max_speed"] == pytest.approx(np.pi, rel=1e-9)
        assert summary["l_star"] == pytest.approx(0.25, abs=1e-4)
        assert summary["max_upper_bound"] == pytest.approx(np.pi, rel=1e-9)
        assert summary["sandwich_violations"] == 0
        assert summary["lower_bound_tight"] is True
        assert summary["qfi_c_relative_spread"] < 1e-9

        rows = _read_csv(cfg.output_dir / "trajectory.csv")
        assert rows[0] == TRAJECTORY_COLUMNS
        assert len(rows) == 42
        mt = rows[0].index("mt")
        assert all(row[mt] != "" for row in rows[1:])
        written = json.loads((cfg.output_dir / "summary.json").read_text())
        assert written["scenario"] == "plus"
        assert written["reference_max_speed"] == pytest.approx(3.103)

    def test_decorrelated_plus(self):
        """Test that a filtered source barely slows |+> down within one wavelength"""
        result = run_trajectory(self._config("plus"))
        assert result.summary["max_speed"] == pytest.approx(np.pi, abs=1e-3)
        assert all(r.mt is None for r in result.records)

    def test_output_independent_of_workers(self):
        """Test byte-identical files for serial and threaded runs"""
        serial = run_trajectory(self._config("p"), self.temp_dir / "serial", workers=1)
        threaded = run_trajectory(self._config("p"), self.temp_dir / "threaded", workers=4)
        for a, b in zip(serial.paths, threaded.paths):
            assert a.read_bytes() == b.read_bytes()

    def test_violation_is_reported_after_writing(self):
        """Test that a broken sandwich raises once the files exist"""
        cfg = self._config("p")
        with patch("qspeed.core.bounds.BoundsRecord.within_sandwich", return_value=False):
            with pytest.raises(NumericalInvariantError) as excinfo:
                run_trajectory(cfg)
        assert excinfo.value.violations == 41
        assert (cfg.output_dir / "trajectory.csv").exists()
        assert (cfg.output_dir / "summary.json").exists()

    @pytest.mark.slow
    def test_noise_loosens_lower_bound(self):
        """Test the noisy pair, where the lower bound is far from the speed"""
        summary = run_trajectory(self._config("pp_noise")).summary
        assert summary["sandwich_violations"] == 0
        assert summary["lower_bound_tight"] is False

    @pytest.mark.slow
    @pytest.mark.parametrize("preset", preset_names())
    def test_presets_respect_bounds(self, preset):
        """Test the bound sandwich on every preset"""
        summary = run_trajectory(self._config(preset)).summary
        assert summary["sandwich_violations"] == 0
        assert summary["component_violations"] == 0
        assert summary["n_points"] == 41


class TestVirtualExperiment:
    """Test the simulated tomography run"""

    def setup_method(self):
        """Set up test environment"""
        self.temp_dir = Path(tempfile.mkdtemp())
        path = self.temp_dir / "plus.yaml"
        ConfigManager().initialize_scenario("plus", path)
        self.cfg = ConfigManager(path).load()
        self.cfg.values.update(
            {
                "output_dir": str(self.temp_dir / "out"),
                "evolution.l_stop": 0.5,
                "experiment.resamples": 500,
            }
        )

    def teardown_method(self):
        """Clean up test environment"""
        shutil.rmtree(self.temp_dir, ignore_errors=True)

    def test_experiment_files(self):
        """Test experiment.csv and the experiment summary block"""
        result = run_virtual_experiment(self.cfg)
        rows = _read_csv(self.temp_dir / "out" / "experiment.csv")
        assert rows[0] == EXPERIMENT_COLUMNS
        assert len(rows) == 22
        block = result.summary["experiment"]
        assert block["resamples"] == 500
        assert block["master_seed"] == 42
        assert block["max_speed_mean"] == pytest.approx(np.pi, abs=0.3)
        assert block["bound_outliers_3sigma"] == 0
        assert block["bias_adjusted_outliers_3sigma"] == 0
        assert 0.0 < block["max_difference_bias"] < 0.02
        assert len(result.estimates) == 21

    @pytest.mark.slow
    def test_bell_bias_against_collapsed_bounds(self):
        """Test that the harmonic-2 difference bias explains every bell outlier"""
        path = self.temp_dir / "bell.yaml"
        ConfigManager().initialize_scenario("bell", path)
        cfg = ConfigManager(path).load()
        cfg.values["output_dir"] = str(self.temp_dir / "bell")
        result = run_virtual_experiment(cfg)
        block = result.summary["experiment"]

        # lower == upper == |a_dot| for the pure pair, so the raw count sees the bias
        assert all(r.upper - r.lower < 1e-5 for r in result.records)
        assert block["bound_outliers_3sigma"] >= 10
        assert block["bias_adjusted_outliers_3sigma"] <= 2
        expected_bias = 2 * np.pi * (1 - np.sin(0.1 * np.pi) / (0.1 * np.pi))
        assert block["max_difference_bias"] == pytest.approx(expected_bias, rel=0.01)

    def test_degraded_preparation(self):
        """Test that a mixed preparation slows the estimated speed"""
        self.cfg.values["experiment.prep_infidelity"] = 0.3
        block = run_virtual_experiment(self.cfg).summary["experiment"]
        assert block["prep_infidelity"] == 0.3
        assert block["max_speed_mean"] == pytest.approx(0.7 * np.pi, abs=0.3)

    def test_disabled_experiment(self):
        """Test that the experiment needs experiment.enabled"""
        self.cfg.values["experiment.enabled"] = False
        with pytest.raises(ConfigError, match="experiment.enabled"):
            run_virtual_experiment(self.cfg)


class TestSweep:
    """Test maxima against the photon number"""

    def setup_method(self):
        """Set up test environment"""
        self.temp_dir = Path(tempfile.mkdtemp())

    def teardown_method(self):
        """Clean up test environment"""
        shutil.rmtree(self.temp_dir, ignore_errors=True)

    def test_product_states(self):
        """Test max bound pi sqrt(N) for |+>^N"""
        rows = sweep_n("product", 4, output_dir=self.temp_dir)
        for row in rows:
            assert row["max_bound"] == pytest.approx(np.pi * np.sqrt(row["n"]), rel=1e-9)
            assert row["qfi_c"] == pytest.approx(4 * np.pi**2 * row["n"], rel=1e-9)
            assert row["max_speed"] <= row["max_bound"] + 1e-9
        assert rows[1]["max_speed"] == pytest.approx(3 * np.sqrt(3) * np.pi / 4, rel=1e-9)
        assert (self.temp_dir / "sweep_product.csv").exists()
        curves = _read_csv(self.temp_dir / "sweep_product_curves.csv")
        assert len(curves) == 1 + 4 * 41

    def test_ghz_states(self):
        """Test max bound and max speed N pi for GHZ states"""
        rows = sweep_n("ghz", 4, output_dir=self.temp_dir)
        for row in rows:
            assert row["max_bound"] == pytest.approx(np.pi * row["n"], rel=1e-9)
            assert row["max_speed"] == pytest.approx(np.pi * row["n"], rel=1e-9)
            assert row["expected_bound"] == pytest.approx(np.pi * row["n"])

    def test_invalid_sweeps(self):
        """Test photon number and kind checks"""
        with pytest.raises(DimensionError):
            sweep_n("ghz", 9, output_dir=self.temp_dir)
        with pytest.raises(ValueError):
            sweep_n("w", 2, output_dir=self.temp_dir)
