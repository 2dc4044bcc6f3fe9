"""
Evolution of the polarization state through birefringent crystal segments.

Two engines realize the same environment trace: ``evolve_dephasing`` applies
the closed-form dephasing factors entrywise (variable crystal only), and
``evolve_grid`` integrates the per-frequency unitary evolution over a
Gauss-Hermite grid, which also handles crystals whose optic axis sits along
|+> (the sigma_x noise plate).
"""

import logging
from dataclasses import dataclass
from typing import List, Sequence, Tuple, Union

import numpy as np

from ..errors import DimensionError, MethodMismatchError
from .parallel import map_ordered
from .quantum import DensityMatrix, Ket, hermitize
from .spectral import (
    SpectralModel,
    dephasing_matrix,
    dephasing_rate_matrix,
    gauss_hermite_grid,
)

logger = logging.getLogger(__name__)

DEFAULT_NODES = 64
MIN_NODES = 16
MAX_GRID_NODES = 2**22
NODE_CHUNK = 4096
STENCIL_STEP = 1e-3
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2.0)


@dataclass(frozen=True)
class SegmentSpec:
    """A birefringent crystal; ``length`` is its optical path difference in wavelengths.

    Axis ``z`` has the optic axis along H/V, axis ``x`` along |+>/|->.
    """

    axis: str
    length: float

    def __post_init__(self):
        if self.axis not in ("z", "x"):
            raise ValueError(f"segment axis must be 'z' or 'x', got {self.axis!r}")
        if not np.isfinite(self.length):
            raise ValueError("segment length must be finite")


@dataclass(frozen=True, eq=False)
class Trajectory:
    l_grid: np.ndarray
    states: Tuple[DensityMatrix, ...]
    scenario_tag: str = ""

    def __post_init__(self):
        grid = np.array(self.l_grid, dtype=float)
        if grid.ndim != 1 or len(grid) != len(self.states):
            raise ValueError("trajectory grid and states differ in length")
        if np.any(np.diff(grid) <= 0):
            raise ValueError("trajectory grid must be strictly increasing")
        grid.setflags(write=False)
        object.__setattr__(self, "l_grid", grid)
        object.__setattr__(self, "states", tuple(self.states))


def make_l_grid(l_start: float, l_stop: float, l_step: float) -> np.ndarray:
    """Grid l_start, l_start + l_step, ... up to l_stop inclusive (within round-off)"""
    if l_step <= 0 or l_start >= l_stop:
        raise ValueError("need l_step > 0 and l_start < l_stop")
    count = int(np.floor((l_stop - l_start) / l_step + 1e-9)) + 1
    return l_start + l_step * np.arange(count)


def _as_density(state: Union[Ket, DensityMatrix]) -> DensityMatrix:
    return state.to_density() if isinstance(state, Ket) else state


def evolve_dephasing(rho0: DensityMatrix, model: SpectralModel, l: float) -> DensityMatrix:
    """rho(l) for a variable crystal of optical path difference l"""
    if rho0.n_qubits != model.n_photons:
        raise DimensionError("state and spectral model disagree on the photon count")
    if l == 0:
        return rho0
    return DensityMatrix(hermitize(np.asarray(rho0.entries) * dephasing_matrix(model, l)))


def _segment_unitaries(u: np.ndarray, segments: Sequence[SegmentSpec]) -> np.ndarray:
    """Per-node single-photon unitaries, shape (nodes, 2, 2), for relative frequencies u"""
    total = np.broadcast_to(np.eye(2, dtype=complex), (u.size, 2, 2)).copy()
    for segment in segments:
        gate = np.zeros((u.size, 2, 2), dtype=complex)
        gate[:, 0, 0] = np.exp(2j * np.pi * u * segment.length)
        gate[:, 1, 1] = 1.0
        if segment.axis == "x":
            gate = HADAMARD @ gate @ HADAMARD
        total = gate @ total
    return total


def _chunk_sum(
    rho0: np.ndarray, points: np.ndarray, weights: np.ndarray, segments: Sequence[SegmentSpec]
) -> np.ndarray:
    m, n = points.shape
    full = _segment_unitaries(points[:, 0], segments)
    for x in range(1, n):
        single = _segment_unitaries(points[:, x], segments)
        dim = full.shape[1] * 2
        full = np.einsum("mab,mcd->macbd", full, single).reshape(m, dim, dim)
    evolved = full @ rho0 @ full.conj().transpose(0, 2, 1)
    return np.einsum("m,mij->ij", weights, evolved)


def evolve_grid(
    initial: Union[Ket, DensityMatrix],
    model: SpectralModel,
    segments: Sequence[SegmentSpec],
    nodes_per_axis: int = DEFAULT_NODES,
    workers: int = 1,
) -> DensityMatrix:
    """
    rho after a sequence of crystal segments, integrated over the spectrum

    Polarization and spectrum are taken to factorize at the input. Node
    contributions are summed in fixed chunks reduced in ascending node order,
    so the result is bit-identical for any ``workers``.
    """
    if nodes_per_axis < MIN_NODES:
        raise ValueError(f"need at least {MIN_NODES} quadrature nodes per axis")
    rho0 = _as_density(initial)
    if rho0.n_qubits != model.n_photons:
        raise DimensionError("state and spectral model disagree on the photon count")
    if not segments:
        return rho0

    points, weights = gauss_hermite_grid(model, nodes_per_axis)
    if weights.size > MAX_GRID_NODES:
        raise ValueError(f"quadrature grid of {weights.size} nodes is too large")
    entries = np.asarray(rho0.entries)
    starts = range(0, weights.size, NODE_CHUNK)
    partials = map_ordered(
        lambda s: _chunk_sum(
            entries, points[s : s + NODE_CHUNK], weights[s : s + NODE_CHUNK], segments
        ),
        starts,
        workers,
    )
    total = np.zeros_like(entries)
    for partial in partials:
        total = total + partial
    return DensityMatrix(hermitize(total))


@dataclass(frozen=True, eq=False)
class Scenario:
    """Initial state, spectrum and fixed noise segments following the variable crystal"""

    rho0: DensityMatrix
    model: SpectralModel
    noise: Tuple[SegmentSpec, ...] = ()
    tag: str = ""
    nodes_per_axis: int = DEFAULT_NODES

    def __post_init__(self):
        if self.rho0.n_qubits != self.model.n_photons:
            raise DimensionError("state and spectral model disagree on the photon count")
        object.__setattr__(self, "noise", tuple(self.noise))

    @property
    def n_qubits(self) -> int:
        return self.rho0.n_qubits

    @property
    def pure_dephasing(self) -> bool:
        return not self.noise

    def state_at(self, l: float) -> DensityMatrix:
        if self.pure_dephasing:
            return evolve_dephasing(self.rho0, self.model, l)
        segments = [SegmentSpec("z", l), *self.noise]
        return evolve_grid(self.rho0, self.model, segments, self.nodes_per_axis)

    def trajectory(self, l_grid: Sequence[float], workers: int = 1) -> Trajectory:
        grid = np.asarray(l_grid, dtype=float)
        states = map_ordered(self.state_at, grid, workers)
        return Trajectory(grid, tuple(states), self.tag)


def rho_dot(scenario: Scenario, l: float, method: str = "auto") -> np.ndarray:
    """
    d rho / dl as a Hermitian traceless matrix

    Args:
        scenario: Evolution to differentiate.
        l: Optical path difference.
        method: ``analytic`` (pure dephasing only), ``stencil`` (5-point
            central difference) or ``auto`` (analytic whenever it applies).
    """
    if method == "auto":
        method = "analytic" if scenario.pure_dephasing else "stencil"
    if method == "analytic":
        if not scenario.pure_dephasing:
            raise MethodMismatchError("analytic derivative needs a pure-dephasing scenario")
        rates = dephasing_rate_matrix(scenario.model, l)
        return hermitize(np.asarray(scenario.rho0.entries) * rates)
    if method != "stencil":
        raise MethodMismatchError(f"unknown derivative method {method!r}")

    h = STENCIL_STEP
    states: List[np.ndarray] = [
        np.asarray(scenario.state_at(l + s * h).entries) for s in (-2, -1, 1, 2)
    ]
    derivative = hermitize((states[0] - 8 * states[1] + 8 * states[2] - states[3]) / (12 * h))
    trace = np.trace(derivative).real / derivative.shape[0]
    return derivative - trace * np.eye(derivative.shape[0])
