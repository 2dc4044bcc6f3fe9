"""
Virtual tomography experiment.

Coincidence counts are drawn for every projector of the 6^n Pauli-eigenstate
set, states are rebuilt by linear inversion with eigenvalue clipping, and the
speed is estimated by central differences with Monte Carlo error bars from a
Poisson parametric bootstrap of the recorded counts.
"""

import itertools
import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq

from ..errors import DimensionError, NonPhysicalStateError
from .evolution import Scenario
from .parallel import map_ordered
from .quantum import DensityMatrix, Ket, Operator, hermitize
from .rng import KeyedRNG, Purpose

logger = logging.getLogger(__name__)

MAX_TOMOGRAPHY_QUBITS = 4
RECONSTRUCTION_TOL = 1e-9
# rounding applied to l before it keys a dataset, so neighbouring grid points share one
L_KEY_DECIMALS = 12

_SQRT_HALF = np.sqrt(0.5)
SINGLE_QUBIT_KETS = {
    "H": np.array([1, 0], dtype=complex),
    "V": np.array([0, 1], dtype=complex),
    "D": np.array([_SQRT_HALF, _SQRT_HALF], dtype=complex),
    "A": np.array([_SQRT_HALF, -_SQRT_HALF], dtype=complex),
    "R": np.array([_SQRT_HALF, 1j * _SQRT_HALF], dtype=complex),
    "L": np.array([_SQRT_HALF, -1j * _SQRT_HALF], dtype=complex),
}
BASIS_OF = {"H": "Z", "V": "Z", "D": "X", "A": "X", "R": "Y", "L": "Y"}


@dataclass(frozen=True)
class ExperimentConfig:
    """Counting statistics and resampling parameters of the virtual experiment"""

    rate_hz: float = 13000.0
    integration_s: float = 5.0
    delta_l: float = 0.025
    resamples: int = 10000
    master_seed: int = 42
    prep_infidelity: float = 0.0

    def __post_init__(self):
        if self.resamples < 1:
            raise ValueError("resamples must be at least 1")
        if not self.delta_l > 0:
            raise ValueError("delta_l must be positive")
        if not self.rate_hz * self.integration_s >= 1:
            raise ValueError("rate_hz * integration_s must be at least 1")
        if not 0.0 <= self.prep_infidelity < 1.0:
            raise ValueError("prep_infidelity must lie in [0, 1)")
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must fit in 64 unsigned bits")

    @property
    def mean_counts(self) -> float:
        """Expected coincidences per measurement basis"""
        return self.rate_hz * self.integration_s


@dataclass(frozen=True)
class MeasurementSetting:
    """One projector of the tomography set, e.g. label ``HD`` for |H>|D>"""

    label: str
    ket: Ket

    @property
    def basis(self) -> str:
        return "".join(BASIS_OF[c] for c in self.label)

    def projector(self) -> Operator:
        return Operator(np.outer(self.ket.amplitudes, self.ket.amplitudes.conj()))


def _label_ket(label: str) -> Ket:
    amplitudes = SINGLE_QUBIT_KETS[label[0]]
    for c in label[1:]:
        amplitudes = np.kron(amplitudes, SINGLE_QUBIT_KETS[c])
    return Ket(amplitudes)


def tomography_settings(n: int) -> List[MeasurementSetting]:
    """The 6^n product projectors, ordered as itertools.product over H, V, D, A, R, L"""
    if not 1 <= n <= MAX_TOMOGRAPHY_QUBITS:
        raise DimensionError(f"tomography supports 1..{MAX_TOMOGRAPHY_QUBITS} qubits, got {n}")
    labels = ("".join(p) for p in itertools.product(SINGLE_QUBIT_KETS, repeat=n))
    return [MeasurementSetting(label, _label_ket(label)) for label in labels]


@lru_cache(maxsize=8)
def _design(labels: Tuple[str, ...]) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Design matrix, its pseudo-inverse and the basis-group indicator for a label set"""
    if not labels or any(len(label) != len(labels[0]) for label in labels):
        raise DimensionError("measurement labels must share one qubit count")
    rows = []
    for label in labels:
        amplitudes = _label_ket(label).amplitudes
        # Tr[rho P] = vec(P^T) . vec(rho) with row-major vec
        rows.append(np.outer(amplitudes, amplitudes.conj()).T.reshape(-1))
    design = np.array(rows)
    dim2 = design.shape[1]
    rank = np.linalg.matrix_rank(design)
    if rank != dim2:
        raise NonPhysicalStateError(
            f"measurement set is not informationally complete (rank {rank} < {dim2})"
        )
    bases = ["".join(BASIS_OF[c] for c in label) for label in labels]
    groups = sorted(set(bases))
    indicator = np.zeros((len(labels), len(groups)))
    for s, basis in enumerate(bases):
        indicator[s, groups.index(basis)] = 1.0
    design.setflags(write=False)
    inverse = np.linalg.pinv(design)
    inverse.setflags(write=False)
    indicator.setflags(write=False)
    return design, inverse, indicator


@dataclass(frozen=True, eq=False)
class TomographyDataset:
    """Coincidence counts for one l, one entry per measurement label"""

    l: float
    settings: Tuple[str, ...]
    counts: np.ndarray
    truth_tag: str = ""

    def __post_init__(self):
        labels = tuple(self.settings)
        counts = np.array(self.counts)
        if counts.shape != (len(labels),):
            raise ValueError("one count per measurement setting is required")
        if not np.all(np.isfinite(counts)) or np.any(counts < 0):
            raise ValueError("counts must be finite and non-negative")
        _design(labels)
        counts.setflags(write=False)
        object.__setattr__(self, "settings", labels)
        object.__setattr__(self, "counts", counts)


@dataclass(frozen=True)
class SpeedEstimate:
    l: float
    a_mean: float
    a_std: float
    speed_mean: float
    speed_std: float


def _labels(settings: Sequence) -> Tuple[str, ...]:
    return tuple(s.label if isinstance(s, MeasurementSetting) else str(s) for s in settings)


def expected_counts(rho: DensityMatrix, settings: Sequence, cfg: ExperimentConfig) -> np.ndarray:
    """Poisson means rate * T * Tr[rho P] for every setting"""
    design, _, _ = _design(_labels(settings))
    probabilities = np.real(design @ np.asarray(rho.entries).reshape(-1))
    return cfg.mean_counts * np.clip(probabilities, 0.0, None)


def simulate_counts(
    rho: DensityMatrix, settings: Sequence, cfg: ExperimentConfig, l: float, truth_tag: str = ""
) -> TomographyDataset:
    """Poisson coincidence counts, one keyed stream per (l, setting index)"""
    labels = _labels(settings)
    means = expected_counts(rho, labels, cfg)
    rng = KeyedRNG(cfg.master_seed)
    counts = np.array(
        [rng.generator(Purpose.COUNTS, l, s).poisson(mean) for s, mean in enumerate(means)],
        dtype=np.int64,
    )
    return TomographyDataset(l, labels, counts, truth_tag)


def _normalize(labels: Tuple[str, ...], counts: np.ndarray) -> np.ndarray:
    """Counts divided by their basis-group totals, for a (..., settings) array"""
    _, _, indicator = _design(labels)
    totals = (counts @ indicator) @ indicator.T
    safe = np.where(totals > 0, totals, 1.0)
    return np.where(totals > 0, counts / safe, 0.0)


def reconstruct_batch(labels: Tuple[str, ...], counts: np.ndarray) -> np.ndarray:
    """
    Linear-inversion estimates for a batch of count vectors

    Args:
        labels: Measurement labels shared by every row.
        counts: Array of shape (batch, settings).

    Returns:
        Array of shape (batch, d, d) of PSD unit-trace matrices.
    """
    _, inverse, _ = _design(labels)
    frequencies = _normalize(labels, np.asarray(counts, dtype=float))
    dim = int(round(np.sqrt(inverse.shape[0])))
    estimates = (frequencies @ inverse.T).reshape(-1, dim, dim)
    estimates = (estimates + estimates.conj().transpose(0, 2, 1)) / 2
    values, vectors = np.linalg.eigh(estimates)
    values = np.clip(values, 0.0, None)
    totals = values.sum(axis=1, keepdims=True)
    # an all-zero clipped spectrum falls back to the maximally mixed state
    values = np.where(totals > 0, values / np.where(totals > 0, totals, 1.0), 1.0 / dim)
    return (vectors * values[:, None, :]) @ vectors.conj().transpose(0, 2, 1)


def reconstruct_state(ds: TomographyDataset) -> DensityMatrix:
    """Linear least-squares inversion, eigenvalue clipping and trace renormalization"""
    estimate = reconstruct_batch(ds.settings, np.asarray(ds.counts)[None, :])[0]
    return DensityMatrix(hermitize(estimate))


def resample_expectations(
    ds: TomographyDataset, a_obs: Operator, cfg: ExperimentConfig
) -> np.ndarray:
    """
    Observable expectation for every bootstrap resample of the dataset

    Each count is redrawn as Poisson with the recorded count as its mean. The
    stream for setting s at this l holds all resamples in order, so resample r
    is the r-th draw of that stream.
    """
    rng = KeyedRNG(cfg.master_seed)
    redrawn = np.stack(
        [
            rng.generator(Purpose.RESAMPLE, ds.l, s).poisson(count, size=cfg.resamples)
            for s, count in enumerate(ds.counts)
        ],
        axis=1,
    )
    states = reconstruct_batch(ds.settings, redrawn)
    return np.real(np.einsum("rij,ji->r", states, np.asarray(a_obs.entries)))


def _summarize(l: float, a_values: np.ndarray, speeds: np.ndarray) -> SpeedEstimate:
    return SpeedEstimate(
        l=float(l),
        a_mean=float(np.mean(a_values)),
        a_std=float(np.std(a_values)),
        speed_mean=float(np.mean(speeds)),
        speed_std=float(np.std(speeds)),
    )


def _central_speeds(a_minus: np.ndarray, a_plus: np.ndarray, delta_l: float) -> np.ndarray:
    return np.abs(a_plus - a_minus) / (2.0 * delta_l)


def mc_speed(
    datasets: Sequence[TomographyDataset], a_obs: Operator, cfg: ExperimentConfig
) -> SpeedEstimate:
    """Central-difference speed at the middle dataset with bootstrap mean and spread"""
    minus, center, plus = datasets
    if minus.settings != center.settings or plus.settings != center.settings:
        raise ValueError("datasets must share their measurement settings")
    delta_l = (plus.l - minus.l) / 2.0
    if delta_l == 0:
        raise ValueError("datasets must be separated by a nonzero delta_l")
    if not np.isclose(center.l - minus.l, plus.l - center.l, rtol=1e-9, atol=1e-12):
        raise ValueError("datasets must be evenly spaced in l")
    a_center = resample_expectations(center, a_obs, cfg)
    speeds = _central_speeds(
        resample_expectations(minus, a_obs, cfg), resample_expectations(plus, a_obs, cfg), delta_l
    )
    return _summarize(center.l, a_center, speeds)


def _mix(rho: DensityMatrix, eps: float) -> DensityMatrix:
    dim = rho.dim
    return DensityMatrix((1.0 - eps) * np.asarray(rho.entries) + eps * np.eye(dim) / dim)


def degrade_preparation(ket: Ket, prep_infidelity: float) -> DensityMatrix:
    """(1 - eps)|psi><psi| + eps I / 2^N"""
    if not 0.0 <= prep_infidelity < 1.0:
        raise ValueError("prep_infidelity must lie in [0, 1)")
    return _mix(ket.to_density(), prep_infidelity)


def degraded_scenario(scenario: Scenario, prep_infidelity: float) -> Scenario:
    if not 0.0 <= prep_infidelity < 1.0:
        raise ValueError("prep_infidelity must lie in [0, 1)")
    if prep_infidelity == 0.0:
        return scenario
    return Scenario(
        _mix(scenario.rho0, prep_infidelity),
        scenario.model,
        scenario.noise,
        scenario.tag,
        scenario.nodes_per_axis,
    )


def _key(l: float) -> float:
    return float(np.round(l, L_KEY_DECIMALS)) + 0.0


def estimate_speeds(
    scenario: Scenario,
    a_obs: Operator,
    l_grid: Sequence[float],
    cfg: ExperimentConfig,
    workers: int = 1,
) -> List[SpeedEstimate]:
    """
    Simulated measurement at l - delta_l, l, l + delta_l for every grid point

    Every distinct l is measured and resampled once; grid points whose
    neighbours coincide share those datasets.
    """
    truth = degraded_scenario(scenario, cfg.prep_infidelity)
    settings = tomography_settings(truth.n_qubits)
    points = [_key(l) for l in l_grid]
    needed = sorted({_key(l + s * cfg.delta_l) for l in points for s in (-1, 0, 1)})
    logger.info("Simulating %d measurement points with %d resamples", len(needed), cfg.resamples)

    def measure(l: float) -> np.ndarray:
        ds = simulate_counts(truth.state_at(l), settings, cfg, l, truth.tag)
        return resample_expectations(ds, a_obs, cfg)

    samples: Dict[float, np.ndarray] = dict(zip(needed, map_ordered(measure, needed, workers)))
    estimates = []
    for l in points:
        speeds = _central_speeds(
            samples[_key(l - cfg.delta_l)], samples[_key(l + cfg.delta_l)], cfg.delta_l
        )
        estimates.append(_summarize(l, samples[l], speeds))
    return estimates


def difference_speeds(
    scenario: Scenario, a_obs: Operator, l_grid: Sequence[float], delta_l: float
) -> np.ndarray:
    """Central-difference speeds of the exact states, the quantity the tomography run estimates"""
    if delta_l <= 0:
        raise ValueError("delta_l must be positive")
    entries = np.asarray(a_obs.entries).T

    def a(l: float) -> float:
        return float(np.real(np.sum(np.asarray(scenario.state_at(l).entries) * entries)))

    return np.array([abs(a(l + delta_l) - a(l - delta_l)) / (2.0 * delta_l) for l in l_grid])


def calibrate_infidelity(
    scenario: Scenario,
    a_obs: Operator,
    target_speed: float,
    delta_l: float,
    l_grid: Sequence[float],
    xtol: float = 1e-10,
) -> Optional[float]:
    """
    Preparation infidelity at which the central-difference maximum speed hits a target

    Returns None when the ideal preparation is already slower than the target.
    """
    if delta_l <= 0:
        raise ValueError("delta_l must be positive")

    def max_difference(eps: float) -> float:
        mixed = degraded_scenario(scenario, eps)
        return float(difference_speeds(mixed, a_obs, l_grid, delta_l).max())

    ideal = max_difference(0.0)
    if ideal < target_speed:
        logger.warning("Target speed %.6g exceeds the ideal %.6g", target_speed, ideal)
        return None
    eps = brentq(lambda e: max_difference(e) - target_speed, 0.0, 1.0 - 1e-9, xtol=xtol)
    logger.info("Calibrated preparation infidelity %.6g for target %.6g", eps, target_speed)
    return float(eps)
