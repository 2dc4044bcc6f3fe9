"""
Test states, operators and dense linear algebra
"""

import numpy as np
import pytest

from qspeed.core.quantum import (
    DensityMatrix,
    Ket,
    Operator,
    eig_hermitian,
    expectation,
    fidelity,
    kron,
    kron_all,
    partial_trace,
    purity,
    qubit_count,
)
from qspeed.core.states import (
    collective_hamiltonian,
    collective_operator,
    make_state,
    parse_state_name,
    pauli,
    projector,
)
from qspeed.errors import DimensionError, NonPhysicalStateError


class TestQuantumTypes:
    """Test validation of kets, density matrices and operators"""

    def test_ket_rejects_unnormalized(self):
        """Test that a ket must have unit norm"""
        with pytest.raises(NonPhysicalStateError):
            Ket(np.array([1.0, 1.0]))

    def test_ket_normalized(self):
        """Test normalization of arbitrary amplitudes"""
        ket = Ket.normalized([3.0, 4.0j])
        assert ket.n_qubits == 1
        assert np.isclose(abs(ket.amplitudes[1]), 0.8)

    def test_ket_rejects_zero_amplitudes(self):
        """Test that a zero vector cannot be normalized"""
        with pytest.raises(NonPhysicalStateError):
            Ket.normalized([0.0, 0.0])

    def test_density_rejects_negative_eigenvalue(self):
        """Test positivity check on density matrices"""
        with pytest.raises(NonPhysicalStateError):
            DensityMatrix(np.diag([1.5, -0.5]))

    def test_density_rejects_bad_trace(self):
        """Test trace check on density matrices"""
        with pytest.raises(NonPhysicalStateError):
            DensityMatrix(np.diag([0.5, 0.4]))

    def test_dimension_must_be_power_of_two(self):
        """Test qubit count checks"""
        assert qubit_count(8) == 3
        with pytest.raises(DimensionError):
            qubit_count(3)
        with pytest.raises(DimensionError):
            qubit_count(512)

    def test_operator_hermitian_flag(self):
        """Test that Hermitian operators are checked and others are allowed"""
        with pytest.raises(NonPhysicalStateError):
            Operator(np.array([[0, 1], [0, 0]]))
        lowering = Operator(np.array([[0, 1], [0, 0]]), hermitian=False)
        assert not lowering.hermitian

    def test_arrays_are_read_only(self):
        """Test immutability of stored arrays"""
        ket = make_state("H")
        with pytest.raises(ValueError):
            ket.amplitudes[0] = 0.0


class TestLinearAlgebra:
    """Test tensor products, traces and eigendecompositions"""

    def test_kron_order(self):
        """Test that qubit 0 is the most significant tensor factor"""
        z_first = kron(pauli("Z"), pauli("I"))
        assert np.allclose(np.diag(z_first.entries), [1, 1, -1, -1])

    def test_kron_dimension_cap(self):
        """Test that products beyond eight qubits are refused"""
        with pytest.raises(DimensionError):
            kron_all([make_state("H")] * 9)

    def test_kron_type_mismatch(self):
        """Test that kets and operators cannot be mixed"""
        with pytest.raises(TypeError):
            kron(make_state("H"), pauli("X"))

    def test_partial_trace_of_bell_state(self):
        """Test that each half of a Bell pair is maximally mixed"""
        rho = make_state("bell").to_density()
        reduced = partial_trace(rho, [0])
        assert np.allclose(reduced.entries, np.eye(2) / 2)

    def test_partial_trace_keeps_product_factor(self):
        """Test partial trace of a product state"""
        rho = kron(make_state("H"), make_state("plus")).to_density()
        assert np.allclose(partial_trace(rho, [1]).entries, np.full((2, 2), 0.5))

    def test_expectation(self):
        """Test expectation values of Pauli operators"""
        assert expectation(make_state("H").to_density(), pauli("Z")) == pytest.approx(1.0)
        assert expectation(make_state("plus").to_density(), pauli("X")) == pytest.approx(1.0)
        assert expectation(make_state("plus").to_density(), pauli("Z")) == pytest.approx(0.0)

    def test_fidelity(self):
        """Test fidelity of identical, orthogonal and mixed states"""
        h = make_state("H").to_density()
        v = make_state("V").to_density()
        mixed = DensityMatrix(np.eye(2) / 2)
        assert fidelity(h, h) == pytest.approx(1.0)
        assert fidelity(h, v) == pytest.approx(0.0, abs=1e-12)
        assert fidelity(h, mixed) == pytest.approx(0.5)

    def test_purity(self):
        """Test purity of pure and maximally mixed states"""
        assert purity(make_state("ghz3").to_density()) == pytest.approx(1.0)
        assert purity(DensityMatrix(np.eye(4) / 4)) == pytest.approx(0.25)

    def test_eig_reconstructs(self):
        """Test that the decomposition reproduces the matrix"""
        rho = DensityMatrix(np.array([[0.7, 0.2 - 0.1j], [0.2 + 0.1j, 0.3]]))
        eig = eig_hermitian(rho)
        assert np.all(np.diff(eig.eigenvalues) >= 0)
        assert np.allclose(eig.reconstruct(), rho.entries)

    @pytest.mark.parametrize("dim", [2, 4, 8, 16])
    def test_eig_reconstructs_random_hermitian(self, dim):
        """Test reconstruction and orthonormality on 250 random matrices per dimension"""
        rng = np.random.default_rng(dim)
        for _ in range(250):
            g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
            m = Operator((g + g.conj().T) / 2)
            eig = eig_hermitian(m)
            vectors = np.asarray(eig.eigenvectors)
            assert np.max(np.abs(eig.reconstruct() - m.entries)) <= 1e-10
            assert np.allclose(vectors.conj().T @ vectors, np.eye(dim), atol=1e-10)
            assert np.all(np.diff(eig.eigenvalues) >= 0)

    def test_degenerate_block_follows_observable(self):
        """Test that a degenerate block is rotated to diagonalize the observable"""
        eig = eig_hermitian(DensityMatrix(np.eye(2) / 2), observable=pauli("X"))
        assert eig.degeneracy_blocks == ((0, 2),)
        v = eig.eigenvectors
        rotated = v.conj().T @ np.asarray(pauli("X").entries) @ v
        assert np.allclose(rotated, np.diag(np.diag(rotated)), atol=1e-12)

    def test_phase_convention(self):
        """Test that the largest component of each eigenvector is real and positive"""
        eig = eig_hermitian(make_state("P").to_density())
        for column in eig.eigenvectors.T:
            pivot = column[np.argmax(np.abs(column))]
            assert pivot.real > 0
            assert abs(pivot.imag) < 1e-12


class TestStates:
    """Test named states and collective operators"""

    def test_state_names(self):
        """Test canonical names and shorthands"""
        assert parse_state_name("plus3") == ("plusN", 3)
        assert parse_state_name("ghz4") == ("ghz", 4)
        assert parse_state_name("PP") == ("PN", 2)
        assert parse_state_name("bell") == ("bell_phi_plus", None)
        with pytest.raises(ValueError):
            parse_state_name("plusX")

    def test_ghz_amplitudes(self):
        """Test the GHZ state of three qubits"""
        amplitudes = make_state("ghz", 3).amplitudes
        assert np.isclose(amplitudes[0], 1 / np.sqrt(2))
        assert np.isclose(amplitudes[7], 1 / np.sqrt(2))
        assert np.isclose(np.sum(np.abs(amplitudes) ** 2), 1.0)

    def test_p_state_bloch_vector(self):
        """Test that |P> points along (1, 1, 1)/sqrt(3)"""
        rho = make_state("P").to_density()
        bloch = [expectation(rho, pauli(name)) for name in "XYZ"]
        assert np.allclose(bloch, np.ones(3) / np.sqrt(3))

    def test_fixed_size_state_rejects_count(self):
        """Test that Bell states cannot be resized"""
        with pytest.raises(DimensionError):
            make_state("bell_phi_plus", 3)
        with pytest.raises(DimensionError):
            make_state("plus2", 3)

    def test_minus_and_phi_minus(self):
        """Test the supplementary named states"""
        assert expectation(make_state("minus").to_density(), pauli("X")) == pytest.approx(-1.0)
        assert np.isclose(make_state("bell_phi_minus").amplitudes[3], -1 / np.sqrt(2))

    def test_custom_state(self):
        """Test custom amplitudes"""
        ket = make_state("custom", amplitudes=[1, 1j])
        assert np.isclose(ket.amplitudes[1], 1j / np.sqrt(2))
        with pytest.raises(ValueError):
            make_state("custom")

    def test_collective_hamiltonian(self):
        """Test pi times the collective sigma_z"""
        h = collective_hamiltonian(2)
        assert np.allclose(np.diag(h.entries), np.pi * np.array([2, 0, 0, -2]))
        z_sum = collective_operator(pauli("Z"), 2)
        assert np.allclose(h.entries, np.pi * np.asarray(z_sum.entries))

    def test_projector(self):
        """Test the projector onto a state"""
        p = projector(make_state("plus"))
        assert np.allclose(p.entries, np.full((2, 2), 0.5))
