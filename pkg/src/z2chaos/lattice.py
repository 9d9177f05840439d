"""Z2 gauge theory on a periodic plaquette chain, in its dual spin formulation.

Qubit layout for the (L_x + 2)-qubit register:

    q = 0            boundary link between the complement and subsystem A
    q = 1 .. L_A     dual spins of the A plaquettes
    q = L_A + 1      boundary link between A and the complement
    q = L_A + 2 ..   dual spins of the complement plaquettes

Subsystem A therefore occupies the contiguous block 0 .. L_A + 1, which is
also the most significant end of a basis index.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .pauli import PauliTerm, commutes
from .rng import substream


@dataclass(frozen=True)
class ModelConfig:
    """Geometry and coupling of the plaquette chain.

    v_y_sector is the eigenvalue of the short-ribbon operator; only the +1
    sector is supported, giving the single-spin electric weight
    kappa = 1 + v_y = 2.
    """

    l_x: int = 10
    l_a: int = 4
    g: float = 0.85
    v_y_sector: int = 1

    def __post_init__(self):
        if self.l_x < 4:
            raise ValueError("need at least 4 plaquettes")
        if self.l_a < 2:
            raise ValueError("l_a < 2 leaves no interior plaquette in A")
        if self.l_a > self.l_x / 2:
            raise ValueError("subsystem may not exceed half the chain")
        if self.v_y_sector != 1:
            raise ValueError("only the v_y = +1 superselection sector is supported")
        if not np.isfinite(self.g):
            raise ValueError("coupling g must be finite")

    @property
    def n_qubits(self) -> int:
        return self.l_x + 2

    @property
    def kappa(self) -> float:
        return 1.0 + self.v_y_sector

    @property
    def subsystem_qubits(self) -> int:
        """Qubit count of subsystem A (two boundary links + L_A dual spins)."""
        return self.l_a + 2

    def bulk_qubits(self):
        """Dual-spin qubits (everything except the two boundary links)."""
        hi = self.l_a + 1
        return [q for q in range(self.n_qubits) if q not in (0, hi)]


@dataclass
class HamiltonianSpec:
    """Sum of tagged Pauli strings defining the dual Hamiltonian."""

    terms: list[PauliTerm]
    n_qubits: int

    def by_family(self, *families: str) -> list[PauliTerm]:
        return [t for t in self.terms if t.family in families]


@dataclass(frozen=True)
class BasisState:
    """Computational z-basis product state; bit 0 is spin-up, 1 spin-down."""

    bits: tuple[int, ...]

    def __post_init__(self):
        if any(b not in (0, 1) for b in self.bits):
            raise ValueError("bits must be 0 or 1")

    @property
    def n_qubits(self) -> int:
        return len(self.bits)

    def index(self) -> int:
        """Basis index with qubit 0 as the most significant bit."""
        i = 0
        for b in self.bits:
            i = (i << 1) | b
        return i


def build_dual_hamiltonian(config: ModelConfig) -> HamiltonianSpec:
    """All Pauli terms of the dual Hamiltonian for the given chain.

    Magnetic terms: one single-X per interior plaquette, and an XX pair for
    each of the four plaquettes adjacent to a boundary link. Electric terms:
    ZZ pairs between neighboring dual spins inside each subsystem, a
    g-weighted Z on each boundary link, and a kappa*g-weighted Z on each
    dual spin.
    """
    g, kappa = config.g, config.kappa
    hi = config.l_a + 1  # the A-complement boundary qubit
    last = config.n_qubits - 1
    a_bulk = list(range(1, config.l_a + 1))
    c_bulk = list(range(hi + 1, config.n_qubits))
    terms = []

    for q in a_bulk[1:-1] + c_bulk[1:-1]:
        terms.append(PauliTerm(1.0, {q: "X"}, family="magnetic-bulk"))
    for i, j in ((0, 1), (0, last), (hi, hi - 1), (hi, hi + 1)):
        terms.append(PauliTerm(1.0, {i: "X", j: "X"}, family="magnetic-boundary"))

    for block in (a_bulk, c_bulk):
        for i, j in zip(block, block[1:]):
            terms.append(PauliTerm(g, {i: "Z", j: "Z"}, family="electric-pair"))
    for q in (0, hi):
        terms.append(PauliTerm(g, {q: "Z"}, family="electric-boundary"))
    for q in a_bulk + c_bulk:
        terms.append(PauliTerm(kappa * g, {q: "Z"}, family="electric-bulk-single"))

    return HamiltonianSpec(terms=terms, n_qubits=config.n_qubits)


def gauss_operators(config: ModelConfig) -> tuple[PauliTerm, PauliTerm]:
    """The two residual three-body Gauss-law Z-strings, one per boundary."""
    hi = config.l_a + 1
    last = config.n_qubits - 1
    g_ca = PauliTerm(1.0, {last: "Z", 0: "Z", 1: "Z"})
    g_ac = PauliTerm(1.0, {config.l_a: "Z", hi: "Z", hi + 1: "Z"})
    return g_ca, g_ac


def symmetry_operators(config: ModelConfig) -> tuple[PauliTerm, PauliTerm]:
    """Reduced-state symmetry Z-strings on A, ordered (CA boundary, AC boundary).

    These are the Gauss strings with their complement-side spin dropped; they
    commute with every reduced density matrix of a Gauss-respecting state.
    """
    hi = config.l_a + 1
    s_ca = PauliTerm(1.0, {0: "Z", 1: "Z"})
    s_ac = PauliTerm(1.0, {config.l_a: "Z", hi: "Z"})
    return s_ca, s_ac


def sample_initial_state(config: ModelConfig, seed: int) -> BasisState:
    """Uniformly random dual-spin configuration completed to satisfy both Gauss laws.

    Any bulk configuration is physical; the two boundary-link bits are then
    fixed (uniquely) so both Gauss strings have eigenvalue +1 on the product
    state.
    """
    rng = substream(seed, "initial-state")
    bits = np.zeros(config.n_qubits, dtype=int)
    bulk = config.bulk_qubits()
    bits[bulk] = rng.integers(0, 2, size=len(bulk))
    hi = config.l_a + 1
    last = config.n_qubits - 1
    bits[0] = (bits[last] + bits[1]) % 2
    bits[hi] = (bits[config.l_a] + bits[hi + 1]) % 2
    return BasisState(bits=tuple(int(b) for b in bits))


def zstring_eigenvalue(term: PauliTerm, bits) -> int:
    """Eigenvalue of a Z-string on a z-basis product state."""
    if any(ax != "Z" for ax in term.factors.values()):
        raise ValueError("not a Z-string")
    parity = sum(bits[q] for q in term.factors) % 2
    return 1 - 2 * parity


def sector_label(row_index: int, config: ModelConfig) -> int:
    """Symmetry sector (1..4) of a subsystem basis index.

    The two boundary Z-string eigenvalues are read off the index bits;
    {+,+} -> 1, {+,-} -> 2, {-,+} -> 3, {-,-} -> 4.
    """
    m = config.subsystem_qubits
    if not 0 <= row_index < (1 << m):
        raise IndexError(f"index {row_index} outside the {1 << m}-dim subsystem basis")
    bits = [(row_index >> (m - 1 - q)) & 1 for q in range(m)]
    s_ca, s_ac = symmetry_operators(config)
    e1 = zstring_eigenvalue(s_ca, bits)
    e2 = zstring_eigenvalue(s_ac, bits)
    return {(1, 1): 1, (1, -1): 2, (-1, 1): 3, (-1, -1): 4}[(e1, e2)]


def sector_indices(config: ModelConfig) -> list[np.ndarray]:
    """Subsystem basis indices of each symmetry sector, in label order."""
    dim = 1 << config.subsystem_qubits
    labels = np.array([sector_label(i, config) for i in range(dim)])
    return [np.nonzero(labels == s)[0] for s in (1, 2, 3, 4)]


def check_gauge_invariance(h: HamiltonianSpec, config: ModelConfig) -> bool:
    """Symbolic check that every term commutes with both Gauss strings."""
    return all(
        commutes(t, g) for t in h.terms for g in gauss_operators(config)
    )


def write_config(config: ModelConfig, path, seed: int | None = None) -> None:
    lines = [f"lx {config.l_x}", f"la {config.l_a}", f"g {config.g!r}"]
    if seed is not None:
        lines.append(f"seed {seed}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_config(path) -> tuple[ModelConfig, int | None]:
    """Parse the plain-text key-value config format (keys lx, la, g, seed)."""
    kv = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, _, value = line.partition(" ")
        kv[key.strip().lower()] = value.strip()
    try:
        config = ModelConfig(
            l_x=int(kv.get("lx", 10)),
            l_a=int(kv.get("la", 4)),
            g=float(kv.get("g", 0.85)),
        )
    except (KeyError, ValueError) as exc:
        raise ValueError(f"bad model config file {path}: {exc}") from exc
    seed = int(kv["seed"]) if "seed" in kv else None
    return config, seed
