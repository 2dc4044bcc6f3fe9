"""
Joint Gaussian frequency models for N photons and their dephasing factors.

Frequencies are expressed relative to the center frequency, u_x = w_x / w_bar,
so every model has mean 1 per photon and a covariance ``rel_cov`` of the
relative frequencies. A polarization coherence between basis states i and j
picks up the factor

    Gamma_k(l) = E[exp(i 2 pi l sum_x k_x u_x)] = chi(2 pi l k),

where k_x = +1 when photon x is H in i and V in j, -1 for the reverse and 0
otherwise, and l is measured in center wavelengths.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial.hermite import hermgauss

from ..errors import DimensionError
from .quantum import MAX_QUBITS

logger = logging.getLogger(__name__)

FWHM_TO_SIGMA = 1.0 / (2.0 * np.sqrt(2.0 * np.log(2.0)))
COV_TOL = 1e-15
ORACLE_MIN_NODES = 32
# principal axes with smaller variance are treated as frequency-sharp
AXIS_VARIANCE_FLOOR = 1e-30


class SourceKind(str, Enum):
    MONOCHROMATIC = "monochromatic"
    DECORRELATED = "decorrelated"
    CORRELATED = "correlated"


@dataclass(frozen=True, eq=False)
class SpectralModel:
    """Joint Gaussian spectrum of the photons, the traced-out environment"""

    n_photons: int
    center_wavelength: float
    rel_cov: np.ndarray
    kind: SourceKind
    rel_mean: np.ndarray = field(default=None)  # type: ignore[assignment]
    pump_sum_var: Optional[float] = None

    def __post_init__(self):
        if not 1 <= self.n_photons <= MAX_QUBITS:
            raise DimensionError(f"photon count {self.n_photons} outside 1..{MAX_QUBITS}")
        n = self.n_photons
        cov = np.array(self.rel_cov, dtype=float).reshape(n, n)
        mean = np.ones(n) if self.rel_mean is None else np.array(self.rel_mean, dtype=float)
        if mean.shape != (n,):
            raise DimensionError(f"rel_mean must have {n} entries")
        if not np.allclose(cov, cov.T, rtol=0.0, atol=COV_TOL):
            raise ValueError("relative covariance is not symmetric")
        if np.linalg.eigvalsh(cov)[0] < -COV_TOL:
            raise ValueError("relative covariance is not positive semidefinite")
        kind = SourceKind(self.kind)
        if kind is SourceKind.MONOCHROMATIC and np.any(cov != 0.0):
            raise ValueError("monochromatic model must have zero covariance")
        if kind is SourceKind.CORRELATED:
            if n != 2:
                raise ValueError("correlated sources are only modelled for photon pairs")
            if self.pump_sum_var is None or abs(cov.sum() - self.pump_sum_var) > COV_TOL:
                raise ValueError("sum-frequency variance does not match the pump value")
        cov.setflags(write=False)
        mean.setflags(write=False)
        object.__setattr__(self, "rel_cov", cov)
        object.__setattr__(self, "rel_mean", mean)
        object.__setattr__(self, "kind", kind)

    def principal_axes(self) -> np.ndarray:
        """Columns are the scaled principal axes (eigenvector times std) with nonzero variance"""
        values, vectors = np.linalg.eigh(self.rel_cov)
        active = values > AXIS_VARIANCE_FLOOR
        return vectors[:, active] * np.sqrt(values[active])


def model_from_optics(
    kind,
    center_nm: float,
    filter_fwhm_nm: Optional[float] = None,
    pump_fwhm_nm: Optional[float] = None,
    n: int = 1,
) -> SpectralModel:
    """
    Build a spectral model from the filter and pump widths of the source

    Args:
        kind: monochromatic, decorrelated or correlated.
        center_nm: Center wavelength of the photons.
        filter_fwhm_nm: Bandpass filter FWHM, sets the per-photon spread.
        pump_fwhm_nm: Pump FWHM (pump at half the photon wavelength),
            sets the spread of the sum frequency of a correlated pair.
        n: Number of photons.
    """
    kind = SourceKind(kind)
    if center_nm <= 0:
        raise ValueError("center wavelength must be positive")
    if kind is SourceKind.MONOCHROMATIC:
        return SpectralModel(n, center_nm, np.zeros((n, n)), kind)

    if filter_fwhm_nm is None or filter_fwhm_nm <= 0:
        raise ValueError("filter FWHM must be positive")
    sigma = (filter_fwhm_nm / center_nm) * FWHM_TO_SIGMA
    if kind is SourceKind.DECORRELATED:
        return SpectralModel(n, center_nm, np.eye(n) * sigma**2, kind)

    if n != 2:
        raise ValueError("correlated sources are only modelled for photon pairs")
    if pump_fwhm_nm is None or pump_fwhm_nm <= 0:
        raise ValueError("pump FWHM must be positive for a correlated source")
    pump_center = center_nm / 2.0
    sum_var = (2.0 * (pump_fwhm_nm / pump_center) * FWHM_TO_SIGMA) ** 2
    off_diagonal = (sum_var - 2.0 * sigma**2) / 2.0
    if off_diagonal > sigma**2:
        raise ValueError("pump spread exceeds what the filtered photons allow")
    cov = np.array([[sigma**2, off_diagonal], [off_diagonal, sigma**2]])
    # re-derive the stored value from the matrix so the invariant holds exactly
    return SpectralModel(n, center_nm, cov, kind, pump_sum_var=float(cov.sum()))


def characteristic_function(model: SpectralModel, t: Sequence[float]) -> complex:
    """chi(t) = exp(i t.mu - t^T C t / 2) of the relative frequencies"""
    t = np.asarray(t, dtype=float)
    if t.shape != (model.n_photons,):
        raise DimensionError(f"t must have {model.n_photons} entries")
    return complex(np.exp(1j * (t @ model.rel_mean) - 0.5 * (t @ model.rel_cov @ t)))


def _check_orders(model: SpectralModel, k) -> np.ndarray:
    k = np.asarray(k, dtype=int)
    if k.shape != (model.n_photons,) or np.any(np.abs(k) > 1):
        raise ValueError(f"coherence orders must be {model.n_photons} values in {{-1, 0, 1}}")
    return k


def dephasing_factor(model: SpectralModel, k, l: float) -> complex:
    """Gamma_k(l) for coherence orders k and optical path difference l (in wavelengths)"""
    k = _check_orders(model, k)
    return characteristic_function(model, 2.0 * np.pi * l * k)


def coherence_orders(n: int) -> np.ndarray:
    """Array K[i, j, x] of coherence orders between basis states i and j"""
    indices = np.arange(2**n)
    # indicator of H (bit value 0) for every photon, qubit 0 most significant
    h = 1 - ((indices[:, None] >> (n - 1 - np.arange(n))[None, :]) & 1)
    return h[:, None, :] - h[None, :, :]


def dephasing_matrix(model: SpectralModel, l: float) -> np.ndarray:
    """Gamma_k(l) for every density-matrix entry at once"""
    orders = coherence_orders(model.n_photons).astype(float)
    t = 2.0 * np.pi * l * orders
    phase = t @ model.rel_mean
    quad = np.einsum("ijx,xy,ijy->ij", t, model.rel_cov, t)
    return np.exp(1j * phase - 0.5 * quad)


def dephasing_rate_matrix(model: SpectralModel, l: float) -> np.ndarray:
    """d Gamma_k / dl for every density-matrix entry"""
    orders = coherence_orders(model.n_photons).astype(float)
    linear = 2.0j * np.pi * (orders @ model.rel_mean)
    quad = (2.0 * np.pi) ** 2 * np.einsum("ijx,xy,ijy->ij", orders, model.rel_cov, orders)
    return (linear - quad * l) * dephasing_matrix(model, l)


def gauss_hermite_grid(model: SpectralModel, nodes_per_axis: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Gauss-Hermite nodes over the joint Gaussian along its principal axes

    Returns:
        (points, weights): points has one row of relative frequencies per
        node, nodes ordered as the C-order cartesian product of axis nodes.
    """
    axes = model.principal_axes()
    d = axes.shape[1]
    if d == 0:
        return model.rel_mean[None, :].copy(), np.ones(1)
    x, w = hermgauss(nodes_per_axis)
    x = x * np.sqrt(2.0)
    w = w / np.sqrt(np.pi)
    grids = np.meshgrid(*([x] * d), indexing="ij")
    z = np.stack([g.reshape(-1) for g in grids], axis=1)
    weights = np.ones(z.shape[0])
    for wg in np.meshgrid(*([w] * d), indexing="ij"):
        weights = weights * wg.reshape(-1)
    points = model.rel_mean[None, :] + z @ axes.T
    logger.debug("Gauss-Hermite grid: %d axes, %d nodes", d, weights.size)
    return points, weights


def quadrature_oracle_gamma(model: SpectralModel, k, l: float, nodes_per_axis: int = 64) -> complex:
    """
    Independent quadrature evaluation of Gamma_k(l), used to check the closed form

    The exponent is linear in the frequencies, so the expectation factorizes
    over the independent principal axes; each axis is integrated with its
    own one-dimensional Gauss-Hermite rule.
    """
    if nodes_per_axis < ORACLE_MIN_NODES:
        raise ValueError(f"oracle needs at least {ORACLE_MIN_NODES} nodes per axis")
    k = _check_orders(model, k)
    if not np.any(k):
        return 1.0 + 0.0j
    scale = 2.0 * np.pi * l
    value = np.exp(1j * scale * (k @ model.rel_mean))
    x, w = hermgauss(nodes_per_axis)
    for axis in model.principal_axes().T:
        s = scale * (k @ axis)
        value = value * np.sum(w / np.sqrt(np.pi) * np.exp(1j * s * np.sqrt(2.0) * x))
    return complex(value)
