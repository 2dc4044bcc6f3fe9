"""
Scenario runs that turn a configuration into result files
"""

import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Any, Dict, List, Optional, Sequence

import numpy as np

from ..errors import ConfigError, DimensionError, NumericalInvariantError
from .bounds import (
    BoundsRecord,
    bound_function,
    bounds_over,
    max_bound,
    max_speed,
    speed_function,
)
from .evolution import Scenario, make_l_grid
from .experiment import SpeedEstimate, degraded_scenario, difference_speeds, estimate_speeds
from .file_manager import FileManager
from .quantum import MAX_QUBITS
from .spectral import SourceKind, model_from_optics
from .states import collective_hamiltonian, make_state, projector

if TYPE_CHECKING:
    from ..config.manager import ScenarioConfig

logger = logging.getLogger(__name__)

TRAJECTORY_COLUMNS = [
    "l",
    "a",
    "a_dot",
    "a_dot_c",
    "a_dot_i",
    "lower",
    "upper",
    "b_ci_plus",
    "b_ci_minus",
    "b_ic_plus",
    "b_ic_minus",
    "mt",
    "pure_upper",
    "qfi_c",
    "qfi_i",
    "delta_ac",
    "delta_ai",
    "purity",
]
EXPERIMENT_COLUMNS = ["l", "a_mean", "a_std", "speed_mean", "speed_std"]
SWEEP_COLUMNS = [
    "n",
    "expected_bound",
    "max_bound",
    "l_max_bound",
    "max_speed",
    "l_max_speed",
    "qfi_c",
]
CURVE_COLUMNS = ["n", "l", "speed", "pure_upper"]
SWEEP_KINDS = ("product", "ghz")
SWEEP_CENTER_NM = 808.0
SWEEP_FILTER_FWHM_NM = 12.0
# speed - lower above this somewhere means the lower bound is not tight
LOWER_GAP_THRESHOLD = 0.1


@dataclass
class RunResult:
    """Records, summary and written files of one scenario run"""

    records: List[BoundsRecord]
    summary: Dict[str, Any]
    paths: List[Path] = field(default_factory=list)
    estimates: List[SpeedEstimate] = field(default_factory=list)


def _relative_spread(values: Sequence[float]) -> float:
    values = np.asarray(values, dtype=float)
    scale = abs(float(np.mean(values)))
    if scale == 0.0:
        return 0.0
    return float((values.max() - values.min()) / scale)


def trajectory_rows(records: Sequence[BoundsRecord]) -> List[List[Any]]:
    return [[getattr(r, column) for column in TRAJECTORY_COLUMNS] for r in records]


def summarize(
    cfg: "ScenarioConfig",
    records: Sequence[BoundsRecord],
    l_star: float,
    speed: float,
    l_upper: float,
    upper: float,
) -> Dict[str, Any]:
    gaps = [r.speed - r.lower for r in records]
    return {
        "scenario": cfg.name,
        "n_points": len(records),
        "max_speed": speed,
        "l_star": l_star,
        "max_upper_bound": upper,
        "l_upper": l_upper,
        "sandwich_violations": sum(not r.within_sandwich() for r in records),
        "component_violations": sum(not r.within_components() for r in records),
        "lower_bound_tight": bool(max(gaps) < LOWER_GAP_THRESHOLD),
        "max_lower_gap": float(max(gaps)),
        "qfi_c_relative_spread": _relative_spread([r.qfi_c for r in records]),
        "rho_dot_method": cfg.rho_dot_method,
        "reference_max_speed": cfg["scenario.reference_max_speed"],
        "reference_max_speed_err": cfg["scenario.reference_max_speed_err"],
    }


def _analyze(cfg: "ScenarioConfig", workers: Optional[int]):
    scenario = cfg.scenario()
    a_obs = cfg.observable()
    method = cfg.rho_dot_method
    workers = workers or cfg.workers
    start = time.perf_counter()
    records = bounds_over(scenario, a_obs, cfg.l_grid(), cfg.hamiltonian(), method, workers)
    l_star, speed = max_speed(records, speed_function(scenario, a_obs, method))
    l_upper, upper = max_bound(records, bound_function(scenario, a_obs, method))
    logger.debug("Bounds over %d points took %.3f s", len(records), time.perf_counter() - start)
    logger.info("%s: max speed %.10g at l = %.6g", cfg.name, speed, l_star)
    return scenario, a_obs, records, summarize(cfg, records, l_star, speed, l_upper, upper)


def _check_violations(summary: Dict[str, Any]) -> None:
    violations = summary["sandwich_violations"]
    if violations:
        raise NumericalInvariantError(
            f"{violations} grid point(s) break the speed bounds beyond tolerance", violations
        )


def run_trajectory(
    cfg: "ScenarioConfig", output_dir: Optional[Path] = None, workers: Optional[int] = None
) -> RunResult:
    """
    Speeds and bounds over the configured grid

    Writes trajectory.csv and summary.json before reporting any bound
    violation as a NumericalInvariantError.
    """
    _, _, records, summary = _analyze(cfg, workers)
    files = FileManager(output_dir or cfg.output_dir)
    paths = [
        files.write_csv("trajectory.csv", TRAJECTORY_COLUMNS, trajectory_rows(records)),
        files.write_json("summary.json", summary),
    ]
    _check_violations(summary)
    return RunResult(records, summary, paths)


def _outliers(
    estimates: Sequence[SpeedEstimate],
    records: Sequence[BoundsRecord],
    bias: Optional[Sequence[float]] = None,
) -> int:
    """Estimates outside [lower - 3 sigma, upper + 3 sigma], widened by ``bias`` when given"""
    count = 0
    for i, (estimate, record) in enumerate(zip(estimates, records)):
        spread = 3.0 * estimate.speed_std + (bias[i] if bias is not None else 0.0)
        if not record.lower - spread <= estimate.speed_mean <= record.upper + spread:
            count += 1
    return count


def run_virtual_experiment(
    cfg: "ScenarioConfig", output_dir: Optional[Path] = None, workers: Optional[int] = None
) -> RunResult:
    """
    Simulated tomography run next to the analytic trajectory

    Writes trajectory.csv, experiment.csv and summary.json, the summary with
    an ``experiment`` block.
    """
    if not cfg.experiment_enabled:
        raise ConfigError("experiment.enabled", "experiment block is disabled")
    scenario, a_obs, records, summary = _analyze(cfg, workers)
    workers = workers or cfg.workers
    exp_cfg = cfg.experiment()
    grid = cfg.l_grid()
    estimates = estimate_speeds(scenario, a_obs, grid, exp_cfg, workers)

    truth, truth_records = scenario, records
    if exp_cfg.prep_infidelity > 0:
        truth = degraded_scenario(scenario, exp_cfg.prep_infidelity)
        truth_records = bounds_over(truth, a_obs, grid, None, cfg.rho_dot_method, workers)
    # where lower == upper the central-difference bias alone can exceed 3 sigma
    bias = np.abs(
        np.array([r.speed for r in truth_records])
        - difference_speeds(truth, a_obs, grid, exp_cfg.delta_l)
    )

    best = int(np.argmax([e.speed_mean for e in estimates]))
    summary["experiment"] = {
        "max_speed_mean": estimates[best].speed_mean,
        "max_speed_std": estimates[best].speed_std,
        "l_max": estimates[best].l,
        "bound_outliers_3sigma": _outliers(estimates, truth_records),
        "bias_adjusted_outliers_3sigma": _outliers(estimates, truth_records, bias),
        "max_difference_bias": float(bias.max()),
        "delta_l": exp_cfg.delta_l,
        "resamples": exp_cfg.resamples,
        "master_seed": exp_cfg.master_seed,
        "prep_infidelity": exp_cfg.prep_infidelity,
    }
    logger.info(
        "%s: estimated max speed %.4f +/- %.4f",
        cfg.name,
        estimates[best].speed_mean,
        estimates[best].speed_std,
    )

    files = FileManager(output_dir or cfg.output_dir)
    paths = [
        files.write_csv("trajectory.csv", TRAJECTORY_COLUMNS, trajectory_rows(records)),
        files.write_csv(
            "experiment.csv",
            EXPERIMENT_COLUMNS,
            [[getattr(e, column) for column in EXPERIMENT_COLUMNS] for e in estimates],
        ),
        files.write_json("summary.json", summary),
    ]
    _check_violations(summary)
    return RunResult(records, summary, paths, estimates)


def sweep_scenario(kind: str, n: int, source: str = "monochromatic") -> Scenario:
    """|+>^N (``product``) or GHZ_N (``ghz``) under a monochromatic or decorrelated source"""
    if kind not in SWEEP_KINDS:
        raise ValueError(f"sweep kind must be one of {', '.join(SWEEP_KINDS)}")
    if SourceKind(source) is SourceKind.CORRELATED:
        raise ValueError("the N sweep supports monochromatic and decorrelated sources")
    ket = make_state("plusN" if kind == "product" else "ghz", n)
    model = model_from_optics(source, SWEEP_CENTER_NM, SWEEP_FILTER_FWHM_NM, n=n)
    return Scenario(ket.to_density(), model, tag=f"{kind}{n}")


def sweep_n(
    kind: str,
    n_max: int,
    source: str = "monochromatic",
    output_dir: Path = Path("results"),
    l_grid: Optional[np.ndarray] = None,
    workers: int = 1,
) -> List[Dict[str, Any]]:
    """
    Maximum speed and maximum bound against the photon number

    Writes sweep_<kind>.csv with one row per N and sweep_<kind>_curves.csv
    with the speed and pure-state bound curves.
    """
    if not 1 <= n_max <= MAX_QUBITS:
        raise DimensionError(f"n_max must lie in 1..{MAX_QUBITS}")
    grid = make_l_grid(0.0, 1.0, 0.025) if l_grid is None else np.asarray(l_grid, dtype=float)
    rows: List[Dict[str, Any]] = []
    curves: List[List[Any]] = []
    for n in range(1, n_max + 1):
        scenario = sweep_scenario(kind, n, source)
        a_obs = projector(make_state("plusN" if kind == "product" else "ghz", n))
        h = collective_hamiltonian(n) if source == SourceKind.MONOCHROMATIC.value else None
        records = bounds_over(scenario, a_obs, grid, h, workers=workers)
        l_speed, speed = max_speed(records, speed_function(scenario, a_obs))
        l_bound, bound = max_bound(records, bound_function(scenario, a_obs))
        expected = np.pi * (np.sqrt(n) if kind == "product" else n)
        rows.append(
            {
                "n": n,
                "expected_bound": float(expected),
                "max_bound": bound,
                "l_max_bound": l_bound,
                "max_speed": speed,
                "l_max_speed": l_speed,
                "qfi_c": records[0].qfi_c,
            }
        )
        curves.extend([n, r.l, r.speed, r.pure_upper] for r in records)
        logger.info("%s N=%d: max bound %.10g, max speed %.10g", kind, n, bound, speed)

    files = FileManager(output_dir)
    files.write_csv(
        f"sweep_{kind}.csv", SWEEP_COLUMNS, [[row[c] for c in SWEEP_COLUMNS] for row in rows]
    )
    files.write_csv(f"sweep_{kind}_curves.csv", CURVE_COLUMNS, curves)
    return rows
