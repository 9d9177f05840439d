"""Single-layer randomized measurements in Haar-random single-qubit bases.

A measurement basis is one Rz-Ry-Rz triple per qubit drawn from the circular
unitary ensemble (global phase dropped). Shots are multinomial samples of
the exact Born distribution of the rotated register, marginalized to the
subsystem; the resulting count records are the interchange format between
simulation and tomography, so real experimental data can be substituted.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuits import Circuit, Gate, apply_circuit, gate_matrix


@dataclass
class RandomBasis:
    """Per-qubit Euler-angle triples (g1, g2, g3); rows indexed by qubit."""

    angles: np.ndarray
    basis_id: int = 0

    def __post_init__(self):
        self.angles = np.asarray(self.angles, dtype=float)
        if self.angles.ndim != 2 or self.angles.shape[1] != 3:
            raise ValueError("angles must have shape (n_qubits, 3)")
        g2 = self.angles[:, 1]
        if np.any(g2 < 0) or np.any(g2 > np.pi):
            raise ValueError("middle Euler angle must lie in [0, pi]")

    @property
    def n_qubits(self) -> int:
        return self.angles.shape[0]

    def restrict(self, m: int) -> "RandomBasis":
        """Basis acting on the first m qubits only."""
        return RandomBasis(self.angles[:m].copy(), self.basis_id)


@dataclass
class MeasurementRecord:
    """Subsystem bitstring counts observed in one random basis."""

    basis: RandomBasis
    counts: dict[int, int]
    n_shots: int
    subsystem_size: int

    def __post_init__(self):
        total = sum(self.counts.values())
        if total != self.n_shots:
            raise ValueError(f"counts sum to {total}, expected {self.n_shots}")
        dim = 1 << self.subsystem_size
        if any(not 0 <= b < dim for b in self.counts):
            raise ValueError("bitstring outside the subsystem basis")

    def frequencies(self) -> np.ndarray:
        """Empirical probabilities over the full subsystem basis."""
        freq = np.zeros(1 << self.subsystem_size)
        for b, c in self.counts.items():
            freq[b] = c / self.n_shots
        return freq


def sample_cue_basis(rng: np.random.Generator, n_qubits: int, basis_id: int = 0) -> RandomBasis:
    """Haar-distributed (up to phase) single-qubit bases: outer angles uniform
    on [0, 2pi), cosine of the middle angle uniform on [-1, 1]."""
    g1 = rng.uniform(0.0, 2 * np.pi, size=n_qubits)
    g2 = np.arccos(rng.uniform(-1.0, 1.0, size=n_qubits))
    g3 = rng.uniform(0.0, 2 * np.pi, size=n_qubits)
    return RandomBasis(np.column_stack([g1, g2, g3]), basis_id)


def basis_rotation_circuit(basis: RandomBasis) -> Circuit:
    """Rz(g1), Ry(g2), Rz(g3) on each qubit, in that order."""
    circuit = Circuit(basis.n_qubits)
    for q in range(basis.n_qubits):
        g1, g2, g3 = basis.angles[q]
        circuit.add(Gate("RZ", (q,), g1))
        circuit.add(Gate("RY", (q,), g2))
        circuit.add(Gate("RZ", (q,), g3))
    return circuit


def single_qubit_unitary(triple) -> np.ndarray:
    """Matrix of the rotation triple as applied by basis_rotation_circuit."""
    g1, g2, g3 = triple
    rz1 = gate_matrix(Gate("RZ", (0,), g1))
    ry = gate_matrix(Gate("RY", (0,), g2))
    rz3 = gate_matrix(Gate("RZ", (0,), g3))
    return rz3 @ ry @ rz1


def basis_unitary(basis: RandomBasis) -> np.ndarray:
    """Tensor product of the per-qubit rotations (qubit 0 most significant)."""
    u = np.eye(1)
    for q in range(basis.n_qubits):
        u = np.kron(u, single_qubit_unitary(basis.angles[q]))
    return u


def simulate_measurements(state: np.ndarray, basis: RandomBasis, n_shots: int,
                          rng: np.random.Generator, subsystem_size: int) -> MeasurementRecord:
    """Rotate, sample full-register bitstrings, marginalize to the subsystem."""
    if n_shots < 1:
        raise ValueError("need at least one shot")
    rotated = apply_circuit(state, basis_rotation_circuit(basis))
    probs = np.abs(rotated) ** 2
    probs /= probs.sum()
    full_counts = rng.multinomial(n_shots, probs)
    marginal = full_counts.reshape(1 << subsystem_size, -1).sum(axis=1)
    counts = {int(b): int(c) for b, c in enumerate(marginal) if c > 0}
    return MeasurementRecord(basis, counts, n_shots, subsystem_size)


def exact_basis_probabilities(rho: np.ndarray, basis: RandomBasis) -> np.ndarray:
    """Born probabilities Tr[U^dag |b><b| U rho] for every subsystem bitstring b."""
    m = int(np.log2(rho.shape[0]))
    if basis.n_qubits != m:
        raise ValueError("basis must be restricted to the subsystem qubits")
    u = basis_unitary(basis)
    p = np.einsum("bi,ij,bj->b", u, rho, u.conj()).real
    assert p.min() > -1e-12 and abs(p.sum() - 1.0) < 1e-10
    return np.clip(p, 0.0, None)


def write_records(path, records: list[MeasurementRecord]) -> None:
    lines = []
    for rec in records:
        lines.append(f"record {rec.basis.basis_id}")
        lines.append(f"shots {rec.n_shots}")
        lines.append(f"subsystem {rec.subsystem_size}")
        lines.append(f"angles {rec.basis.n_qubits}")
        for q in range(rec.basis.n_qubits):
            g1, g2, g3 = rec.basis.angles[q]
            lines.append(f"{q} {g1:.17g} {g2:.17g} {g3:.17g}")
        lines.append(f"counts {len(rec.counts)}")
        for b in sorted(rec.counts):
            bits = format(b, f"0{rec.subsystem_size}b")
            lines.append(f"{bits} {rec.counts[b]}")
        lines.append("end")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_records(path) -> list[MeasurementRecord]:
    records = []
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    i = 0
    while i < len(lines):
        if not lines[i].startswith("record"):
            raise ValueError(f"expected 'record' at line {i + 1} of {path}")
        basis_id = int(lines[i].split()[1])
        n_shots = int(lines[i + 1].split()[1])
        subsystem = int(lines[i + 2].split()[1])
        n_qubits = int(lines[i + 3].split()[1])
        i += 4
        angles = np.zeros((n_qubits, 3))
        for _ in range(n_qubits):
            parts = lines[i].split()
            angles[int(parts[0])] = [float(x) for x in parts[1:4]]
            i += 1
        n_counts = int(lines[i].split()[1])
        i += 1
        counts = {}
        for _ in range(n_counts):
            bits, c = lines[i].split()
            counts[int(bits, 2)] = int(c)
            i += 1
        if lines[i] != "end":
            raise ValueError(f"unterminated record in {path}")
        i += 1
        records.append(MeasurementRecord(RandomBasis(angles, basis_id), counts,
                                         n_shots, subsystem))
    return records
