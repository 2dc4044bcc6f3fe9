"""
Named polarization states and Hamiltonians used by the dephasing experiment
"""

import re
from typing import Optional, Sequence, Tuple

import numpy as np

from ..errors import DimensionError
from .quantum import MAX_QUBITS, Ket, Operator, kron_all

SQRT2 = np.sqrt(2.0)

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

SINGLE_QUBIT_STATES = ("H", "V", "plus", "minus", "P")
TWO_QUBIT_STATES = ("bell_phi_plus", "bell_phi_minus")
N_QUBIT_STATES = ("plusN", "ghz", "PN")
STATE_NAMES = SINGLE_QUBIT_STATES + TWO_QUBIT_STATES + N_QUBIT_STATES + ("custom",)

_ALIASES = {"bell": "bell_phi_plus", "phi_plus": "bell_phi_plus", "phi_minus": "bell_phi_minus"}
_COUNTED = re.compile(r"^(plus|ghz|P)(\d+)$")
_COUNTED_NAMES = {"plus": "plusN", "ghz": "ghz", "P": "PN"}


def pauli(name: str) -> Operator:
    """Single-qubit Pauli operator by name (I, X, Y, Z; case-insensitive)"""
    key = name.upper()
    if key not in PAULI:
        raise ValueError(f"unknown Pauli operator {name!r}")
    return Operator(PAULI[key])


def projector(ket: Ket) -> Operator:
    return Operator(np.outer(ket.amplitudes, ket.amplitudes.conj()))


def parse_state_name(text: str) -> Tuple[str, Optional[int]]:
    """
    Resolve a state name or shorthand into (canonical name, qubit count)

    Shorthands carry the qubit count as a suffix: ``plus3``, ``ghz4``, ``P2``.
    ``PP`` is the two-qubit |P> product and ``bell`` is |Phi+>.
    """
    text = text.strip()
    if text in STATE_NAMES:
        return text, None
    if text in _ALIASES:
        return _ALIASES[text], None
    if text == "PP":
        return "PN", 2
    match = _COUNTED.match(text)
    if match:
        return _COUNTED_NAMES[match.group(1)], int(match.group(2))
    raise ValueError(f"unknown state name {text!r}")


def _p_state() -> np.ndarray:
    root = np.sqrt(3.0 + np.sqrt(3.0))
    return np.array([(1 - 1j) * (1 + np.sqrt(3.0)) / (2 * root), 1 / root], dtype=complex)


_SINGLE = {
    "H": np.array([1, 0], dtype=complex),
    "V": np.array([0, 1], dtype=complex),
    "plus": np.array([1, 1], dtype=complex) / SQRT2,
    "minus": np.array([1, -1], dtype=complex) / SQRT2,
    "P": _p_state(),
}


def make_state(
    name: str, n: Optional[int] = None, amplitudes: Optional[Sequence[complex]] = None
) -> Ket:
    """
    Build one of the named initial states

    Args:
        name: Canonical name or shorthand (see ``parse_state_name``).
        n: Qubit count. Fixed-size states reject a mismatching count;
            N-qubit states default to one qubit.
        amplitudes: Amplitudes for the ``custom`` state.
    """
    canonical, counted = parse_state_name(name)
    if counted is not None:
        if n is not None and n != counted:
            raise DimensionError(f"state {name!r} has {counted} qubits, not {n}")
        n = counted

    if canonical == "custom":
        if amplitudes is None:
            raise ValueError("custom state needs amplitudes")
        ket = Ket.normalized(amplitudes)
        if n is not None and ket.n_qubits != n:
            raise DimensionError(f"custom amplitudes describe {ket.n_qubits} qubits, not {n}")
        return ket

    if canonical in SINGLE_QUBIT_STATES:
        if n not in (None, 1):
            raise DimensionError(f"{canonical!r} is a single-qubit state")
        return Ket(_SINGLE[canonical])

    if canonical in TWO_QUBIT_STATES:
        if n not in (None, 2):
            raise DimensionError(f"{canonical!r} is a two-qubit state")
        sign = 1 if canonical == "bell_phi_plus" else -1
        return Ket(np.array([1, 0, 0, sign], dtype=complex) / SQRT2)

    n = 1 if n is None else n
    if not 1 <= n <= MAX_QUBITS:
        raise DimensionError(f"qubit count {n} outside 1..{MAX_QUBITS}")
    if canonical == "plusN":
        return kron_all([Ket(_SINGLE["plus"])] * n)
    if canonical == "PN":
        return kron_all([Ket(_SINGLE["P"])] * n)
    amps = np.zeros(2**n, dtype=complex)
    amps[0] = amps[-1] = 1 / SQRT2
    return Ket(amps)


def _popcounts(n: int) -> np.ndarray:
    indices = np.arange(2**n)
    return np.array([bin(i).count("1") for i in indices])


def collective_operator(single: Operator, n: int) -> Operator:
    """Sum over qubits of ``single`` acting on one qubit with identities elsewhere"""
    if not 1 <= n <= MAX_QUBITS:
        raise DimensionError(f"qubit count {n} outside 1..{MAX_QUBITS}")
    total = np.zeros((2**n, 2**n), dtype=complex)
    for q in range(n):
        factors = [np.eye(2)] * n
        factors[q] = np.asarray(single.entries)
        term = factors[0]
        for f in factors[1:]:
            term = np.kron(term, f)
        total += term
    return Operator(total, hermitian=single.hermitian)


def collective_hamiltonian(n: int) -> Operator:
    """pi * sum of sigma_z over n qubits, with the wavelength as the unit of length"""
    if not 1 <= n <= MAX_QUBITS:
        raise DimensionError(f"qubit count {n} outside 1..{MAX_QUBITS}")
    return Operator(np.diag(np.pi * (n - 2 * _popcounts(n))).astype(complex))
