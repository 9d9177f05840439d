"""Dense state-vector engine: preparation, exact evolution, reduction.

States are plain complex ndarrays of length 2**n_qubits with qubit 0 as the
most significant index bit. Exact evolution diagonalizes the Hamiltonian
once (the decomposition is cached on the HamiltonianSpec) and reuses it for
every time point and initial state.
"""
from __future__ import annotations

import numpy as np
import scipy.linalg

from .lattice import BasisState, HamiltonianSpec
from .pauli import PauliTerm, apply_term, terms_matrix

NORM_TOL = 1e-12
TRACE_TOL = 1e-10
EIG_FLOOR = -1e-10


def prepare(basis_state: BasisState) -> np.ndarray:
    """Unit vector with all amplitude on the given product state."""
    psi = np.zeros(1 << basis_state.n_qubits, dtype=complex)
    psi[basis_state.index()] = 1.0
    return psi


def eigensystem(h: HamiltonianSpec):
    """Eigenvalues and eigenvectors of the dense Hamiltonian, cached on h."""
    cached = getattr(h, "_eigh_cache", None)
    if cached is None:
        mat = terms_matrix(h.terms, h.n_qubits)
        try:
            evals, evecs = scipy.linalg.eigh(mat, driver="evd")
        except scipy.linalg.LinAlgError as exc:
            raise RuntimeError(f"Hamiltonian eigendecomposition failed: {exc}") from exc
        cached = (evals, np.ascontiguousarray(evecs))
        h._eigh_cache = cached
    return cached


def exact_evolve(state: np.ndarray, h: HamiltonianSpec, t: float) -> np.ndarray:
    """exp(-iHt)|state> through the cached eigendecomposition of H."""
    if not np.isfinite(t):
        raise ValueError("evolution time must be finite")
    if len(state) != 1 << h.n_qubits:
        raise ValueError("state dimension does not match the Hamiltonian")
    evals, evecs = eigensystem(h)
    coeffs = evecs.conj().T @ state
    return evecs @ (np.exp(-1j * evals * t) * coeffs)


def expectation(state: np.ndarray, term: PauliTerm) -> float:
    """coefficient * <state|P|state>; the imaginary residue must be noise."""
    n = int(np.log2(len(state)))
    val = np.vdot(state, apply_term(term, state, n))
    assert abs(val.imag) < 1e-8, f"non-Hermitian expectation residue {val.imag:g}"
    return float(val.real)


def energy_expectation(state: np.ndarray, h: HamiltonianSpec) -> float:
    return sum(expectation(state, t) for t in h.terms)


def partial_trace(state: np.ndarray, keep_count: int) -> np.ndarray:
    """Reduced density matrix of the first keep_count qubits (high index bits)."""
    n = int(np.log2(len(state)))
    if keep_count > n:
        raise ValueError("cannot keep more qubits than the register holds")
    block = state.reshape(1 << keep_count, 1 << (n - keep_count))
    return block @ block.conj().T


def assert_valid_state(state: np.ndarray, tol: float = NORM_TOL) -> None:
    norm = np.linalg.norm(state)
    if abs(norm - 1.0) > tol:
        raise AssertionError(f"state norm {norm} deviates from 1 by more than {tol}")


def assert_valid_density_matrix(rho: np.ndarray) -> None:
    if np.max(np.abs(rho - rho.conj().T)) > NORM_TOL:
        raise AssertionError("density matrix is not Hermitian")
    tr = np.trace(rho).real
    if abs(tr - 1.0) > TRACE_TOL:
        raise AssertionError(f"density matrix trace {tr} != 1")
    evals = np.linalg.eigvalsh(rho)
    if evals.min() < EIG_FLOOR:
        raise AssertionError(f"density matrix has negative eigenvalue {evals.min():g}")
