"""
Dense linear algebra for N-qubit polarization systems.

Qubit 0 is the leftmost tensor factor and the most significant bit of a basis
index. H maps to bit value 0 and V to 1, so two-qubit basis indices run
|HH>, |HV>, |VH>, |VV>.
"""

import logging
from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Optional, Tuple, TypeVar, Union

import numpy as np
import scipy.linalg

from ..errors import DimensionError, NonPhysicalStateError, NumericalInvariantError

logger = logging.getLogger(__name__)

MAX_QUBITS = 8
MAX_DIM = 2**MAX_QUBITS
NORM_TOL = 1e-12
HERMITIAN_TOL = 1e-12
PSD_TOL = 1e-10
FIDELITY_PSD_TOL = 1e-8
IMAG_RESIDUE_TOL = 1e-8
DEFAULT_TOL_DEGEN = 1e-10


def _frozen(array) -> np.ndarray:
    out = np.array(array, dtype=complex)
    out.setflags(write=False)
    return out


def qubit_count(dim: int) -> int:
    """Number of qubits for a Hilbert-space dimension, enforcing the 2^8 cap"""
    if dim < 2 or dim > MAX_DIM or dim & (dim - 1):
        raise DimensionError(f"dimension {dim} is not a power of two between 2 and {MAX_DIM}")
    return dim.bit_length() - 1


def _square(entries: np.ndarray) -> int:
    if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {entries.shape}")
    return qubit_count(entries.shape[0])


def hermitize(entries: np.ndarray) -> np.ndarray:
    """Symmetrize away round-off anti-Hermitian parts"""
    entries = np.asarray(entries, dtype=complex)
    return (entries + entries.conj().T) / 2


@dataclass(frozen=True, eq=False)
class Ket:
    """Normalized pure state of N qubits"""

    amplitudes: np.ndarray

    def __post_init__(self):
        amplitudes = _frozen(np.asarray(self.amplitudes).reshape(-1))
        qubit_count(amplitudes.size)
        norm = float(np.vdot(amplitudes, amplitudes).real)
        if abs(norm - 1.0) > NORM_TOL:
            raise NonPhysicalStateError(f"ket norm {norm!r} differs from 1")
        object.__setattr__(self, "amplitudes", amplitudes)

    @classmethod
    def normalized(cls, amplitudes) -> "Ket":
        """Build a ket from arbitrary (nonzero, finite) amplitudes"""
        amplitudes = np.asarray(amplitudes, dtype=complex).reshape(-1)
        norm = float(np.linalg.norm(amplitudes))
        if not np.isfinite(norm) or norm < 1e-15:
            raise NonPhysicalStateError("amplitudes cannot be normalized")
        return cls(amplitudes / norm)

    @property
    def dim(self) -> int:
        return int(self.amplitudes.size)

    @property
    def n_qubits(self) -> int:
        return qubit_count(self.dim)

    def to_density(self) -> "DensityMatrix":
        return DensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()))


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Physical (Hermitian, unit-trace, PSD) state of N qubits"""

    entries: np.ndarray

    def __post_init__(self):
        entries = _frozen(self.entries)
        _square(entries)
        if not np.allclose(entries, entries.conj().T, rtol=0.0, atol=HERMITIAN_TOL):
            raise NonPhysicalStateError("density matrix is not Hermitian")
        trace = float(np.trace(entries).real)
        if abs(trace - 1.0) > NORM_TOL:
            raise NonPhysicalStateError(f"density matrix trace {trace!r} differs from 1")
        lowest = float(np.linalg.eigvalsh(entries)[0])
        if lowest < -PSD_TOL:
            raise NonPhysicalStateError(f"density matrix has eigenvalue {lowest!r}")
        object.__setattr__(self, "entries", entries)

    @property
    def dim(self) -> int:
        return int(self.entries.shape[0])

    @property
    def n_qubits(self) -> int:
        return qubit_count(self.dim)

    def purity(self) -> float:
        return float(np.real(np.vdot(self.entries.conj().T, self.entries)))


@dataclass(frozen=True, eq=False)
class Operator:
    """Square operator on N qubits; Hermitian unless flagged otherwise"""

    entries: np.ndarray
    hermitian: bool = True

    def __post_init__(self):
        entries = _frozen(self.entries)
        _square(entries)
        if self.hermitian and not np.allclose(
            entries, entries.conj().T, rtol=0.0, atol=HERMITIAN_TOL
        ):
            raise NonPhysicalStateError("operator flagged Hermitian is not Hermitian")
        object.__setattr__(self, "entries", entries)

    @property
    def dim(self) -> int:
        return int(self.entries.shape[0])

    @property
    def n_qubits(self) -> int:
        return qubit_count(self.dim)

    def affine(self, alpha: float, beta: float = 0.0) -> "Operator":
        """alpha * self + beta * I"""
        return Operator(alpha * self.entries + beta * np.eye(self.dim), self.hermitian)


@dataclass(frozen=True, eq=False)
class EigenDecomposition:
    """Ascending spectrum with column eigenvectors and degeneracy blocks.

    Blocks are half-open index ranges ``(start, stop)`` of consecutive
    eigenvalues separated by gaps below the degeneracy tolerance.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    degeneracy_blocks: Tuple[Tuple[int, int], ...]

    def reconstruct(self) -> np.ndarray:
        return (self.eigenvectors * self.eigenvalues) @ self.eigenvectors.conj().T


State = TypeVar("State", Ket, Operator, DensityMatrix)


def kron(a: State, b: State) -> State:
    """Tensor product of two kets, two operators or two density matrices"""
    if type(a) is not type(b):
        raise TypeError(f"cannot take kron of {type(a).__name__} and {type(b).__name__}")
    if a.dim * b.dim > MAX_DIM:
        raise DimensionError(f"tensor product dimension {a.dim * b.dim} exceeds {MAX_DIM}")
    if isinstance(a, Ket):
        return Ket(np.kron(a.amplitudes, b.amplitudes))  # type: ignore[return-value]
    if isinstance(a, DensityMatrix):
        return DensityMatrix(np.kron(a.entries, b.entries))  # type: ignore[return-value]
    return Operator(  # type: ignore[return-value]
        np.kron(a.entries, b.entries), hermitian=a.hermitian and b.hermitian  # type: ignore
    )


def kron_all(factors: Iterable[State]) -> State:
    return reduce(kron, factors)


def partial_trace(rho: DensityMatrix, keep: Iterable[int]) -> DensityMatrix:
    """Reduced state on the kept qubits (kept in ascending index order)"""
    n = rho.n_qubits
    kept = sorted(set(keep))
    if not kept or any(q < 0 or q >= n for q in kept):
        raise DimensionError(f"invalid qubit selection {kept} for a {n}-qubit state")
    rows = list(range(n))
    cols = list(range(n, 2 * n))
    for q in range(n):
        if q not in kept:
            cols[q] = rows[q]
    out = [rows[q] for q in kept] + [cols[q] for q in kept]
    tensor = np.asarray(rho.entries).reshape((2,) * (2 * n))
    reduced = np.einsum(tensor, rows + cols, out)
    dim = 2 ** len(kept)
    return DensityMatrix(hermitize(reduced.reshape(dim, dim)))


def _degeneracy_blocks(values: np.ndarray, tol_degen: float) -> Tuple[Tuple[int, int], ...]:
    blocks = []
    start = 0
    for i in range(1, len(values) + 1):
        if i == len(values) or values[i] - values[i - 1] >= tol_degen:
            blocks.append((start, i))
            start = i
    return tuple(blocks)


def _fix_phases(vectors: np.ndarray) -> np.ndarray:
    # largest-magnitude component of every column made real positive
    pivots = np.argmax(np.abs(vectors) > np.abs(vectors).max(axis=0) - 1e-12, axis=0)
    phases = vectors[pivots, np.arange(vectors.shape[1])]
    return vectors * (np.abs(phases) / phases)


def eig_hermitian(
    m: Union[Operator, DensityMatrix],
    tol_degen: float = DEFAULT_TOL_DEGEN,
    observable: Optional[Operator] = None,
) -> EigenDecomposition:
    """
    Hermitian eigendecomposition with a canonical basis inside degenerate blocks

    Args:
        m: Hermitian operator or density matrix.
        tol_degen: Absolute eigenvalue gap below which eigenvalues share a block.
        observable: When given, each degenerate block is rotated so that the
            observable projected onto the block is diagonal.
    """
    if isinstance(m, Operator) and not m.hermitian:
        raise NonPhysicalStateError("eig_hermitian needs a Hermitian operator")
    try:
        values, vectors = scipy.linalg.eigh(np.asarray(m.entries))
    except scipy.linalg.LinAlgError as e:
        raise NumericalInvariantError(f"Hermitian eigensolver failed: {e}") from e

    blocks = _degeneracy_blocks(values, tol_degen)
    if observable is not None:
        a = np.asarray(observable.entries)
        for start, stop in blocks:
            if stop - start < 2:
                continue
            sub = vectors[:, start:stop]
            _, rotation = scipy.linalg.eigh(hermitize(sub.conj().T @ a @ sub))
            vectors[:, start:stop] = sub @ rotation

    vectors = _fix_phases(vectors)
    values = np.array(values, dtype=float)
    values.setflags(write=False)
    vectors.setflags(write=False)
    return EigenDecomposition(values, vectors, blocks)


def expectation(rho: DensityMatrix, a: Operator) -> float:
    """Tr[rho A] for a Hermitian observable"""
    if rho.dim != a.dim:
        raise DimensionError(f"state dimension {rho.dim} does not match operator {a.dim}")
    value = np.sum(np.asarray(rho.entries) * np.asarray(a.entries).T)
    if abs(value.imag) > IMAG_RESIDUE_TOL:
        raise NonPhysicalStateError(f"expectation value has imaginary residue {value.imag!r}")
    return float(value.real)


def _psd_sqrt(entries: np.ndarray) -> np.ndarray:
    values, vectors = scipy.linalg.eigh(hermitize(entries))
    if values[0] < -FIDELITY_PSD_TOL:
        raise NonPhysicalStateError(f"state has eigenvalue {values[0]!r}")
    return (vectors * np.sqrt(np.clip(values, 0.0, None))) @ vectors.conj().T


def fidelity(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """Uhlmann fidelity (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2, clipped to [0, 1]"""
    if rho.dim != sigma.dim:
        raise DimensionError(f"state dimensions differ: {rho.dim} vs {sigma.dim}")
    root = _psd_sqrt(np.asarray(rho.entries))
    _psd_sqrt(np.asarray(sigma.entries))
    inner = scipy.linalg.eigvalsh(hermitize(root @ np.asarray(sigma.entries) @ root))
    value = float(np.sum(np.sqrt(np.clip(inner, 0.0, None))) ** 2)
    return min(max(value, 0.0), 1.0)


def purity(rho: DensityMatrix) -> float:
    return rho.purity()
