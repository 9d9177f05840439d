"""Weighted Pauli strings and the algebra used everywhere else.

Qubit 0 is the most significant bit of a basis index, so qubit q of an
n-qubit register maps to bit (n-1-q).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

AXES = ("X", "Y", "Z")

# single-qubit products A*B -> (phase, C) for A != B, identities handled separately
_MUL = {
    ("X", "Y"): (1j, "Z"), ("Y", "X"): (-1j, "Z"),
    ("Y", "Z"): (1j, "X"), ("Z", "Y"): (-1j, "X"),
    ("Z", "X"): (1j, "Y"), ("X", "Z"): (-1j, "Y"),
}


@dataclass
class PauliTerm:
    """A real coefficient times a tensor product of single-qubit Paulis.

    ``factors`` maps qubit index -> axis ("X", "Y" or "Z"). Qubits absent
    from the map carry the identity. ``family`` is an optional tag used by
    Hamiltonian builders (e.g. "magnetic-bulk"); it does not affect algebra.
    """

    coefficient: float
    factors: dict[int, str]
    family: str | None = field(default=None, compare=False)

    def __post_init__(self):
        if not np.isfinite(self.coefficient) or self.coefficient == 0:
            raise ValueError(f"coefficient must be finite and nonzero, got {self.coefficient}")
        for q, ax in self.factors.items():
            if q < 0:
                raise ValueError(f"negative qubit index {q}")
            if ax not in AXES:
                raise ValueError(f"unknown Pauli axis {ax!r} on qubit {q}")

    def key(self) -> tuple:
        """Canonical hashable identity of the Pauli string (coefficient ignored)."""
        return tuple(sorted(self.factors.items()))

    def support(self) -> tuple[int, ...]:
        return tuple(sorted(self.factors))

    def weight(self) -> int:
        return len(self.factors)

    def label(self) -> str:
        return "".join(f"{ax}{q}" for q, ax in sorted(self.factors.items())) or "I"

    def __str__(self):
        return f"{self.coefficient:+g}*{self.label()}"


def commutes(a: PauliTerm, b: PauliTerm) -> bool:
    """Pauli strings either commute or anticommute; True if they commute."""
    odd = 0
    for q, ax in a.factors.items():
        bx = b.factors.get(q)
        if bx is not None and bx != ax:
            odd ^= 1
    return odd == 0


def product(a: PauliTerm, b: PauliTerm) -> tuple[complex, dict[int, str]]:
    """Multiply two Pauli strings; returns (phase * coefficients, factor map)."""
    phase = complex(a.coefficient * b.coefficient)
    out = dict(a.factors)
    for q, bx in b.factors.items():
        ax = out.pop(q, None)
        if ax is None:
            out[q] = bx
        elif ax != bx:
            ph, cx = _MUL[(ax, bx)]
            phase *= ph
            out[q] = cx
        # ax == bx -> identity, qubit dropped
    return phase, out


def hermitian_commutator(a: PauliTerm, b: PauliTerm) -> PauliTerm | None:
    """Hermitized commutator i[A, B], reduced to a unit-coefficient string.

    Anticommuting strings give [A, B] = 2AB with AB anti-Hermitian, so
    i[A, B] is Hermitian and proportional to a single Pauli string. Returns
    None for commuting inputs (trivial commutator) or when the product is
    the identity.
    """
    if commutes(a, b):
        return None
    _, factors = product(a, b)
    if not factors:
        return None
    return PauliTerm(1.0, factors)


def _masks(term: PauliTerm, n_qubits: int):
    if term.factors and max(term.factors) >= n_qubits:
        raise ValueError(f"term {term.label()} exceeds {n_qubits}-qubit register")
    flip = 0
    phase = 0
    n_y = 0
    for q, ax in term.factors.items():
        bit = 1 << (n_qubits - 1 - q)
        if ax in ("X", "Y"):
            flip |= bit
        if ax in ("Y", "Z"):
            phase |= bit
        if ax == "Y":
            n_y += 1
    return flip, phase, n_y


def apply_term(term: PauliTerm, psi: np.ndarray, n_qubits: int) -> np.ndarray:
    """coefficient * P |psi> without building the dense matrix."""
    flip, phase_mask, n_y = _masks(term, n_qubits)
    idx = np.arange(len(psi), dtype=np.uint64)
    signs = 1.0 - 2.0 * (np.bitwise_count(idx & np.uint64(phase_mask)) & 1)
    vals = (term.coefficient * (1j ** n_y)) * signs * psi
    out = np.empty_like(vals)
    out[idx ^ np.uint64(flip)] = vals
    return out


def term_matrix(term: PauliTerm, n_qubits: int) -> np.ndarray:
    """Dense matrix of coefficient * P; complex only when the string has a Y."""
    flip, phase_mask, n_y = _masks(term, n_qubits)
    dim = 1 << n_qubits
    idx = np.arange(dim, dtype=np.uint64)
    signs = 1.0 - 2.0 * (np.bitwise_count(idx & np.uint64(phase_mask)) & 1)
    vals = (term.coefficient * (1j ** n_y)) * signs
    m = np.zeros((dim, dim), dtype=complex if n_y else float)
    m[idx ^ np.uint64(flip), idx] = vals if n_y else vals.real
    return m


def terms_matrix(terms, n_qubits: int) -> np.ndarray:
    """Dense sum of weighted Pauli strings; real float64 when no Y appears."""
    dim = 1 << n_qubits
    any_y = any("Y" in t.factors.values() for t in terms)
    h = np.zeros((dim, dim), dtype=complex if any_y else float)
    idx = np.arange(dim, dtype=np.uint64)
    for t in terms:
        flip, phase_mask, n_y = _masks(t, n_qubits)
        signs = 1.0 - 2.0 * (np.bitwise_count(idx & np.uint64(phase_mask)) & 1)
        vals = (t.coefficient * (1j ** n_y)) * signs
        h[idx ^ np.uint64(flip), idx] += vals if any_y else vals.real
    return h
