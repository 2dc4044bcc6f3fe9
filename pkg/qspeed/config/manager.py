"""
Configuration management for qspeed scenarios
"""

import copy
import logging
import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
import yaml

from ..core.evolution import MIN_NODES, Scenario, SegmentSpec, make_l_grid
from ..core.experiment import ExperimentConfig
from ..core.file_manager import FileManager, load_matrix
from ..core.quantum import MAX_QUBITS, Ket, Operator
from ..core.spectral import SourceKind, SpectralModel, model_from_optics
from ..core.states import collective_hamiltonian, make_state, parse_state_name, projector
from ..errors import ConfigError
from .presets import render_preset

logger = logging.getLogger(__name__)

ENV_PREFIX = "QSPEED_"
RHO_DOT_METHODS = ("auto", "analytic", "stencil")
OBSERVABLE_KINDS = ("initial_state_projector", "custom")


def _to_bool(value: Any) -> bool:
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in ("true", "1", "yes", "on"):
        return True
    if text in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {value!r}")


def _to_int(value: Any) -> int:
    if isinstance(value, bool):
        raise ValueError(f"expected an integer, got {value!r}")
    if isinstance(value, float):
        if not value.is_integer():
            raise ValueError(f"expected an integer, got {value!r}")
        return int(value)
    return int(str(value).strip())


def _to_float(value: Any) -> float:
    if isinstance(value, bool):
        raise ValueError(f"expected a number, got {value!r}")
    result = float(str(value).strip()) if isinstance(value, str) else float(value)
    if not math.isfinite(result):
        raise ValueError(f"expected a finite number, got {value!r}")
    return result


def _to_str(value: Any) -> str:
    if isinstance(value, (dict, list)):
        raise ValueError(f"expected text, got {value!r}")
    return str(value)


def _to_amplitudes(value: Any) -> List[complex]:
    """A list of complex amplitudes; strings are comma separated (``0.6, 0.8j``)"""
    items = value.split(",") if isinstance(value, str) else value
    if not isinstance(items, list) or not items:
        raise ValueError("expected a non-empty list of amplitudes")
    return [complex(str(item).replace(" ", "")) for item in items]


def _optional(convert: Callable[[Any], Any]) -> Callable[[Any], Any]:
    def wrapped(value: Any) -> Any:
        if value is None:
            return None
        if isinstance(value, str) and value.strip().lower() in ("", "null", "none"):
            return None
        return convert(value)

    return wrapped


KEY_TYPES: Dict[str, Callable[[Any], Any]] = {
    "scenario.name": _to_str,
    "scenario.reference_max_speed": _optional(_to_float),
    "scenario.reference_max_speed_err": _optional(_to_float),
    "initial_state.name": _to_str,
    "initial_state.n": _optional(_to_int),
    "initial_state.amplitudes": _optional(_to_amplitudes),
    "source.kind": _to_str,
    "source.center_nm": _to_float,
    "source.filter_fwhm_nm": _optional(_to_float),
    "source.pump_fwhm_nm": _optional(_to_float),
    "evolution.l_start": _to_float,
    "evolution.l_stop": _to_float,
    "evolution.l_step": _to_float,
    "evolution.rho_dot": _to_str,
    "evolution.nodes_per_axis": _to_int,
    "evolution.workers": _to_int,
    "noise.enabled": _to_bool,
    "noise.axis": _to_str,
    "noise.length_lambda": _to_float,
    "observable.kind": _to_str,
    "observable.matrix_file": _optional(_to_str),
    "experiment.enabled": _to_bool,
    "experiment.rate_hz": _to_float,
    "experiment.integration_s": _to_float,
    "experiment.delta_l": _to_float,
    "experiment.resamples": _to_int,
    "experiment.master_seed": _to_int,
    "experiment.prep_infidelity": _to_float,
    "output_dir": _to_str,
}


def env_key(key: str) -> str:
    """Environment variable overriding ``key``, e.g. QSPEED_SOURCE_CENTER_NM"""
    return f"{ENV_PREFIX}{key.upper().replace('.', '_').replace('-', '_')}"


@dataclass(frozen=True)
class ScenarioConfig:
    """Validated scenario settings, one attribute group per config section"""

    values: Dict[str, Any]
    base_dir: Path

    def __getitem__(self, key: str) -> Any:
        return self.values[key]

    @property
    def name(self) -> str:
        return self.values["scenario.name"]

    @property
    def output_dir(self) -> Path:
        return Path(self.values["output_dir"])

    @property
    def workers(self) -> int:
        return self.values["evolution.workers"]

    @property
    def rho_dot_method(self) -> str:
        return self.values["evolution.rho_dot"]

    @property
    def experiment_enabled(self) -> bool:
        return self.values["experiment.enabled"]

    @property
    def unitary(self) -> bool:
        """Monochromatic source without noise plates: the evolution is unitary"""
        return (
            self.values["source.kind"] == SourceKind.MONOCHROMATIC.value
            and not self.values["noise.enabled"]
        )

    def l_grid(self) -> np.ndarray:
        return make_l_grid(
            self.values["evolution.l_start"],
            self.values["evolution.l_stop"],
            self.values["evolution.l_step"],
        )

    def initial_ket(self) -> Ket:
        return make_state(
            self.values["initial_state.name"],
            self.values["initial_state.n"],
            self.values["initial_state.amplitudes"],
        )

    def spectral_model(self) -> SpectralModel:
        return model_from_optics(
            self.values["source.kind"],
            self.values["source.center_nm"],
            self.values["source.filter_fwhm_nm"],
            self.values["source.pump_fwhm_nm"],
            n=self.initial_ket().n_qubits,
        )

    def noise_segments(self) -> Tuple[SegmentSpec, ...]:
        if not self.values["noise.enabled"]:
            return ()
        return (SegmentSpec(self.values["noise.axis"], self.values["noise.length_lambda"]),)

    def scenario(self) -> Scenario:
        return Scenario(
            self.initial_ket().to_density(),
            self.spectral_model(),
            self.noise_segments(),
            self.name,
            self.values["evolution.nodes_per_axis"],
        )

    def observable(self) -> Operator:
        if self.values["observable.kind"] == "custom":
            matrix_file = Path(self.values["observable.matrix_file"])
            if not matrix_file.is_absolute():
                matrix_file = self.base_dir / matrix_file
            return load_matrix(matrix_file)
        return projector(self.initial_ket())

    def hamiltonian(self) -> Optional[Operator]:
        """Generator of the evolution when it is unitary, for the Mandelstam-Tamm bound"""
        if not self.unitary:
            return None
        return collective_hamiltonian(self.initial_ket().n_qubits)

    def experiment(self) -> ExperimentConfig:
        return ExperimentConfig(
            rate_hz=self.values["experiment.rate_hz"],
            integration_s=self.values["experiment.integration_s"],
            delta_l=self.values["experiment.delta_l"],
            resamples=self.values["experiment.resamples"],
            master_seed=self.values["experiment.master_seed"],
            prep_infidelity=self.values["experiment.prep_infidelity"],
        )


class ConfigManager:
    """Loads scenario files, applies environment overrides and validates the result"""

    DEFAULT_CONFIG: Dict[str, Any] = {
        "scenario": {"name": "", "reference_max_speed": None, "reference_max_speed_err": None},
        "initial_state": {"name": "plus", "n": None, "amplitudes": None},
        # 808 nm photons from a 404 nm pump behind a 12 nm bandpass filter
        "source": {
            "kind": "monochromatic",
            "center_nm": 808.0,
            "filter_fwhm_nm": 12.0,
            "pump_fwhm_nm": 0.06,
        },
        "evolution": {
            "l_start": 0.0,
            "l_stop": 1.0,
            "l_step": 0.025,
            "rho_dot": "auto",
            "nodes_per_axis": 64,
            "workers": 1,
        },
        "noise": {"enabled": False, "axis": "x", "length_lambda": 120.0},
        "observable": {"kind": "initial_state_projector", "matrix_file": None},
        "experiment": {
            "enabled": False,
            "rate_hz": 13000.0,
            "integration_s": 5.0,
            "delta_l": 0.025,
            "resamples": 10000,
            "master_seed": 42,
            "prep_infidelity": 0.0,
        },
        "output_dir": "results",
    }

    def __init__(self, config_file: Optional[Path] = None):
        """
        Initialize config manager

        Args:
            config_file: Scenario file. If None, only defaults and
                environment overrides apply.
        """
        self.config_file = Path(config_file) if config_file is not None else None
        self._lines: Dict[str, int] = {}

    def load(self) -> ScenarioConfig:
        """Resolve the scenario: defaults, then file values, then environment overrides"""
        values = self._flatten_dict(copy.deepcopy(self.DEFAULT_CONFIG))
        file_values = self._load_file() if self.config_file is not None else {}
        for key, raw in file_values.items():
            if key not in KEY_TYPES:
                raise ConfigError(key, "unknown key", self._lines.get(key))
            values[key] = self._coerce(key, raw, line=self._lines.get(key))
        for key in KEY_TYPES:
            env_value = os.getenv(env_key(key))
            if env_value is not None:
                logger.debug("Override %s from %s", key, env_key(key))
                values[key] = self._coerce(key, env_value, source=f"environment {env_key(key)}")
        if not values["scenario.name"] and self.config_file is not None:
            values["scenario.name"] = self.config_file.stem
        base_dir = self.config_file.parent if self.config_file is not None else Path.cwd()
        config = ScenarioConfig(values, base_dir)
        self._validate(config)
        return config

    def initialize_scenario(self, preset: str, target: Path, force: bool = False) -> Path:
        """
        Write the annotated scenario file of a preset

        Args:
            preset: Preset name (see qspeed.config.presets)
            target: File to create
            force: Whether to overwrite an existing file
        """
        target = Path(target)
        if target.exists() and not force:
            raise ConfigError("init", f"{target} already exists. Use --force to overwrite.")
        try:
            text = render_preset(preset)
        except KeyError as e:
            raise ConfigError("init", str(e.args[0]))
        FileManager(target.parent).write_text(target.name, text)
        self.config_file = target
        return target

    def get_config(self, key: str, default: Any = None) -> Any:
        """
        Get one resolved configuration value using dot notation

        Args:
            key: Configuration key (e.g., 'source.kind')
            default: Value returned for unknown keys
        """
        if key not in KEY_TYPES:
            return default
        return self.load()[key]

    def get_all_config(self) -> Dict[str, Any]:
        """All resolved configuration values as a flat dictionary with dot notation keys"""
        return dict(self.load().values)

    def _line(self, key: str) -> Optional[int]:
        return self._lines.get(key)

    def _source(self, key: str) -> str:
        if os.getenv(env_key(key)) is not None:
            return f"environment {env_key(key)}"
        return str(self.config_file) if self.config_file is not None else ""

    def _fail(self, key: str, reason: str) -> ConfigError:
        if os.getenv(env_key(key)) is not None:
            return ConfigError(key, reason, source=self._source(key))
        return ConfigError(key, reason, self._line(key), self._source(key))

    def _coerce(self, key: str, raw: Any, line: Optional[int] = None, source: str = "") -> Any:
        try:
            return KEY_TYPES[key](raw)
        except (TypeError, ValueError) as e:
            raise ConfigError(key, f"invalid value {raw!r}: {e}", line, source)

    def _load_file(self) -> Dict[str, Any]:
        """Read the scenario file, recording the line of every key"""
        assert self.config_file is not None
        if not self.config_file.is_file():
            raise ConfigError("config", f"file not found: {self.config_file}")
        with open(self.config_file, "r", encoding="utf-8") as f:
            text = f.read()
        try:
            node = yaml.compose(text)
            data = yaml.safe_load(text)
        except yaml.YAMLError as e:
            mark = getattr(e, "problem_mark", None)
            line = mark.line + 1 if mark is not None else None
            raise ConfigError("config", f"invalid YAML: {getattr(e, 'problem', e)}", line)
        if data is None:
            return {}
        if not isinstance(data, dict) or not isinstance(node, yaml.MappingNode):
            raise ConfigError("config", "top level must be a mapping", 1)
        self._lines = self._node_lines(node)
        return self._flatten_dict(data)

    def _node_lines(self, node: yaml.MappingNode, parent_key: str = "") -> Dict[str, int]:
        lines: Dict[str, int] = {}
        for key_node, value_node in node.value:
            new_key = f"{parent_key}.{key_node.value}" if parent_key else str(key_node.value)
            if isinstance(value_node, yaml.MappingNode):
                lines.update(self._node_lines(value_node, new_key))
            else:
                lines[new_key] = key_node.start_mark.line + 1
        return lines

    def _flatten_dict(
        self, d: Dict[str, Any], parent_key: str = "", sep: str = "."
    ) -> Dict[str, Any]:
        """Flatten nested dictionary with dot notation keys"""
        items: List[Tuple[str, Any]] = []
        for k, v in d.items():
            new_key = f"{parent_key}{sep}{k}" if parent_key else str(k)
            if isinstance(v, dict):
                items.extend(self._flatten_dict(v, new_key, sep=sep).items())
            else:
                items.append((new_key, v))
        return dict(items)

    def _validate(self, config: ScenarioConfig) -> None:
        """Check every invariant, naming the offending key"""
        v = config.values

        try:
            canonical, counted = parse_state_name(v["initial_state.name"])
        except ValueError as e:
            raise self._fail("initial_state.name", str(e))
        n = v["initial_state.n"]
        if n is not None and not 1 <= n <= MAX_QUBITS:
            raise self._fail("initial_state.n", f"qubit count must lie in 1..{MAX_QUBITS}")
        if canonical == "custom" and v["initial_state.amplitudes"] is None:
            raise self._fail("initial_state.amplitudes", "custom state needs amplitudes")
        try:
            ket = config.initial_ket()
        except ValueError as e:
            key = "initial_state.amplitudes" if canonical == "custom" else "initial_state.n"
            raise self._fail(key, str(e))

        if v["source.kind"] not in [kind.value for kind in SourceKind]:
            raise self._fail("source.kind", f"unknown source kind {v['source.kind']!r}")
        if v["source.center_nm"] <= 0:
            raise self._fail("source.center_nm", "must be positive")
        if v["source.kind"] != SourceKind.MONOCHROMATIC.value:
            width = v["source.filter_fwhm_nm"]
            if width is None or width <= 0:
                raise self._fail("source.filter_fwhm_nm", "must be positive")
        if v["source.kind"] == SourceKind.CORRELATED.value:
            if ket.n_qubits != 2:
                raise self._fail("source.kind", "correlated sources need exactly two photons")
            pump = v["source.pump_fwhm_nm"]
            if pump is None or pump <= 0:
                raise self._fail("source.pump_fwhm_nm", "must be positive")

        if v["evolution.l_step"] <= 0:
            raise self._fail("evolution.l_step", "must be positive")
        if v["evolution.l_start"] >= v["evolution.l_stop"]:
            raise self._fail("evolution.l_stop", "must exceed evolution.l_start")
        if v["evolution.rho_dot"] not in RHO_DOT_METHODS:
            raise self._fail("evolution.rho_dot", f"must be one of {', '.join(RHO_DOT_METHODS)}")
        if v["evolution.rho_dot"] == "analytic" and v["noise.enabled"]:
            raise self._fail("evolution.rho_dot", "analytic derivative needs noise.enabled false")
        if v["evolution.nodes_per_axis"] < MIN_NODES:
            raise self._fail("evolution.nodes_per_axis", f"must be at least {MIN_NODES}")
        if v["evolution.workers"] < 1:
            raise self._fail("evolution.workers", "must be at least 1")

        if v["noise.axis"] not in ("x", "z"):
            raise self._fail("noise.axis", "must be 'x' or 'z'")

        if v["observable.kind"] not in OBSERVABLE_KINDS:
            raise self._fail("observable.kind", f"must be one of {', '.join(OBSERVABLE_KINDS)}")
        if v["observable.kind"] == "custom":
            if not v["observable.matrix_file"]:
                raise self._fail("observable.matrix_file", "custom observable needs a matrix file")
            observable = config.observable()
            if observable.dim != ket.dim:
                raise self._fail(
                    "observable.matrix_file",
                    f"matrix dimension {observable.dim} does not match the {ket.dim}-dim state",
                )

        if v["experiment.rate_hz"] <= 0:
            raise self._fail("experiment.rate_hz", "must be positive")
        if v["experiment.integration_s"] <= 0:
            raise self._fail("experiment.integration_s", "must be positive")
        if v["experiment.rate_hz"] * v["experiment.integration_s"] < 1:
            raise self._fail("experiment.integration_s", "rate_hz * integration_s must be >= 1")
        if v["experiment.delta_l"] <= 0:
            raise self._fail("experiment.delta_l", "must be positive")
        if v["experiment.resamples"] < 1:
            raise self._fail("experiment.resamples", "must be at least 1")
        if not 0 <= v["experiment.master_seed"] < 2**64:
            raise self._fail("experiment.master_seed", "must fit in 64 unsigned bits")
        if not 0.0 <= v["experiment.prep_infidelity"] < 1.0:
            raise self._fail("experiment.prep_infidelity", "must lie in [0, 1)")
        if v["experiment.enabled"] and ket.n_qubits > 4:
            raise self._fail("experiment.enabled", "tomography supports at most 4 qubits")

        try:
            config.spectral_model()
        except ValueError as e:
            # remaining model errors come from the widths, the pump for a correlated pair
            if v["source.kind"] == SourceKind.CORRELATED.value:
                raise self._fail("source.pump_fwhm_nm", str(e))
            raise self._fail("source.filter_fwhm_nm", str(e))
        try:
            config.noise_segments()
        except ValueError as e:
            raise self._fail("noise.length_lambda", str(e))
