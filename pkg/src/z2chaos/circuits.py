"""Rotation-gate circuit IR, first-order Trotter compilation, MS-angle reduction.

Conventions (fixed by the gate hardware they model):
    RX/RY/RZ(a) = exp(-i a/2 * sigma)      single-qubit
    RXX(a)      = exp(-i a   * X (x) X)    entangling, no 1/2
ZZ rotations are not native; they are realized by conjugating an RXX with
RY(-pi/2) / RY(+pi/2) on both qubits. Entangling angles are folded into
|a| <= pi/4, compensating with RX(pi) pairs where required.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .lattice import HamiltonianSpec

_SINGLE = ("RX", "RY", "RZ")
PI = math.pi


@dataclass(frozen=True)
class Gate:
    kind: str
    qubits: tuple[int, ...]
    angle: float

    def __post_init__(self):
        if self.kind in _SINGLE:
            if len(self.qubits) != 1:
                raise ValueError(f"{self.kind} takes exactly one qubit")
        elif self.kind == "RXX":
            if len(self.qubits) != 2 or self.qubits[0] == self.qubits[1]:
                raise ValueError("RXX takes two distinct qubits")
        else:
            raise ValueError(f"unknown gate kind {self.kind!r}")

    def inverse(self) -> "Gate":
        return Gate(self.kind, self.qubits, -self.angle)


@dataclass
class Circuit:
    n_qubits: int
    gates: list[Gate] = field(default_factory=list)

    def __post_init__(self):
        for g in self.gates:
            self._check(g)

    def _check(self, gate: Gate):
        if any(q < 0 or q >= self.n_qubits for q in gate.qubits):
            raise ValueError(f"gate {gate} outside {self.n_qubits}-qubit register")

    def add(self, gate: Gate):
        self._check(gate)
        self.gates.append(gate)

    def inverse(self) -> "Circuit":
        return Circuit(self.n_qubits, [g.inverse() for g in reversed(self.gates)])

    def count(self, kind: str) -> int:
        return sum(1 for g in self.gates if g.kind == kind)

    def to_text(self) -> str:
        lines = [f"{g.kind} " + " ".join(map(str, g.qubits)) + f" {g.angle:.17g}"
                 for g in self.gates]
        return "\n".join([f"# circuit qubits={self.n_qubits}"] + lines) + "\n"

    def save(self, path):
        Path(path).write_text(self.to_text())


def load_circuit(path) -> Circuit:
    lines = Path(path).read_text().splitlines()
    header = lines[0].split("qubits=")
    circuit = Circuit(int(header[1]))
    for line in lines[1:]:
        if not line.strip():
            continue
        parts = line.split()
        circuit.add(Gate(parts[0], tuple(int(q) for q in parts[1:-1]), float(parts[-1])))
    return circuit


def reduce_ms_angle(angle: float) -> tuple[float, bool]:
    """Fold an RXX angle into |a| <= pi/4, up to a global phase.

    Returns the substituted angle and whether a compensating RX(pi) on both
    qubits is required. Interval boundaries belong to the lower case.
    """
    if not math.isfinite(angle):
        raise ValueError("angle must be finite")
    a = math.remainder(angle, 2 * PI)  # maps into [-pi, pi]
    if abs(a) <= PI / 4:
        return a, False
    if abs(a) <= 3 * PI / 4:
        return (a + PI / 2, True) if a < 0 else (a - PI / 2, True)
    return (a + PI, False) if a < 0 else (a - PI, False)


def _emit_rxx(circuit: Circuit, i: int, j: int, angle: float):
    reduced, flips = reduce_ms_angle(angle)
    circuit.add(Gate("RXX", (i, j), reduced))
    if flips:
        circuit.add(Gate("RX", (i,), PI))
        circuit.add(Gate("RX", (j,), PI))


def decompose_zz(i: int, j: int, angle: float) -> list[Gate]:
    """Gate list equal to exp(-i*angle*Z_i Z_j) up to global phase."""
    if i == j:
        raise ValueError("ZZ rotation needs two distinct qubits")
    return [
        Gate("RY", (i,), -PI / 2),
        Gate("RY", (j,), -PI / 2),
        Gate("RXX", (i, j), angle),
        Gate("RY", (i,), PI / 2),
        Gate("RY", (j,), PI / 2),
    ]


def _term_class(term) -> str:
    axes = set(term.factors.values())
    if axes == {"Z"}:
        return "Z" if term.weight() == 1 else "ZZ"
    if axes == {"X"}:
        return "X" if term.weight() == 1 else "XX"
    raise ValueError(f"dual Hamiltonian term {term.label()} is neither X- nor Z-type")


def build_trotter_circuit(h: HamiltonianSpec, t: float, n_steps: int,
                          family_order: tuple[str, ...] = ("Z", "ZZ", "X", "XX")) -> Circuit:
    """First-order Trotter circuit for exp(-iHt) with n_steps repetitions.

    Within one step the term families act in family_order; a term with
    coefficient c contributes a rotation of angle 2*c*dt (single qubit) or
    c*dt (entangling). ZZ terms go through the RY-conjugated MS
    decomposition and every RXX angle is folded by reduce_ms_angle.
    """
    if n_steps < 1:
        raise ValueError("need at least one Trotter step")
    dt = t / n_steps
    grouped = {fam: [] for fam in family_order}
    for term in h.terms:
        grouped[_term_class(term)].append(term)

    circuit = Circuit(h.n_qubits)
    for _ in range(n_steps):
        for fam in family_order:
            for term in grouped[fam]:
                qubits = term.support()
                angle = term.coefficient * dt
                if fam == "Z":
                    circuit.add(Gate("RZ", qubits, 2 * angle))
                elif fam == "X":
                    circuit.add(Gate("RX", qubits, 2 * angle))
                elif fam == "XX":
                    _emit_rxx(circuit, *qubits, angle)
                else:  # ZZ via basis change around a reduced MS gate
                    i, j = qubits
                    circuit.add(Gate("RY", (i,), -PI / 2))
                    circuit.add(Gate("RY", (j,), -PI / 2))
                    _emit_rxx(circuit, i, j, angle)
                    circuit.add(Gate("RY", (i,), PI / 2))
                    circuit.add(Gate("RY", (j,), PI / 2))
    return circuit


def _apply_single(state, matrix, q, n):
    shaped = state.reshape(1 << q, 2, -1)
    a0 = shaped[:, 0, :].copy()
    a1 = shaped[:, 1, :]
    shaped[:, 0, :] = matrix[0, 0] * a0 + matrix[0, 1] * a1
    shaped[:, 1, :] = matrix[1, 0] * a0 + matrix[1, 1] * a1


def _apply_rxx(state, angle, i, j, n):
    if i > j:
        i, j = j, i
    shaped = state.reshape(1 << i, 2, 1 << (j - i - 1), 2, -1)
    c, s = math.cos(angle), -1j * math.sin(angle)
    a00 = shaped[:, 0, :, 0, :].copy()
    a01 = shaped[:, 0, :, 1, :].copy()
    a10 = shaped[:, 1, :, 0, :].copy()
    a11 = shaped[:, 1, :, 1, :]
    shaped[:, 0, :, 0, :] = c * a00 + s * a11
    shaped[:, 1, :, 1, :] = c * a11 + s * a00
    shaped[:, 0, :, 1, :] = c * a01 + s * a10
    shaped[:, 1, :, 0, :] = c * a10 + s * a01


def gate_matrix(gate: Gate) -> np.ndarray:
    """Dense 2x2 (or 4x4 for RXX) unitary of a gate."""
    a = gate.angle
    c, s = math.cos(a / 2), math.sin(a / 2)
    if gate.kind == "RX":
        return np.array([[c, -1j * s], [-1j * s, c]])
    if gate.kind == "RY":
        return np.array([[c, -s], [s, c]], dtype=complex)
    if gate.kind == "RZ":
        return np.array([[np.exp(-1j * a / 2), 0], [0, np.exp(1j * a / 2)]])
    xx = np.fliplr(np.eye(4))
    return math.cos(a) * np.eye(4) - 1j * math.sin(a) * xx


def apply_circuit(state: np.ndarray, circuit: Circuit) -> np.ndarray:
    """Run the circuit over a copy of the state with in-place butterflies."""
    if len(state) != 1 << circuit.n_qubits:
        raise ValueError("state dimension does not match circuit register")
    out = np.array(state, dtype=complex, copy=True)
    n = circuit.n_qubits
    for gate in circuit.gates:
        if gate.kind == "RXX":
            _apply_rxx(out, gate.angle, *gate.qubits, n)
        else:
            _apply_single(out, gate_matrix(gate), gate.qubits[0], n)
    return out
