"""Entanglement-Hamiltonian ansatz and its fits to measured or exact data.

The ansatz parameterizes log(rho_A) as a sum of local Hermitian Pauli
strings on the subsystem: the subsystem-supported Hamiltonian terms and the
two boundary-symmetry Z-strings, closed under hermitized commutators to
depth two, under multiplication by the boundary-symmetry strings (operators
that differ only by a residual Gauss string act identically within each
symmetry sector, and the set carries one representative per sector
weighting), and completed by the two-plaquette magnetic composites that
commutators cannot reach because magnetic terms commute. Everything is kept
to a window of at most three adjacent dual sites. For the default subsystem
of 4 plaquettes this yields 73 operators, growing by 15 per added plaquette.

Fitting minimizes either the squared mismatch of randomized-measurement
frequencies (finite statistics) or the Kullback-Leibler divergence from an
exactly known reduced state (the infinite-measurement limit), over box-
constrained couplings with a quasi-Newton method and central-difference
gradients.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.optimize

from .lattice import (ModelConfig, build_dual_hamiltonian, sector_indices,
                      symmetry_operators)
from .measurement import MeasurementRecord, basis_unitary
from .pauli import PauliTerm, commutes, product, term_matrix
from .rng import substream

BETA_BOUND = 50.0
MAX_WINDOW = 3


@dataclass
class AnsatzOperator:
    term: PauliTerm
    provenance: str


@dataclass
class AnsatzOperatorSet:
    operators: list[AnsatzOperator]
    config: ModelConfig

    def __len__(self):
        return len(self.operators)

    @property
    def n_qubits(self) -> int:
        return self.config.subsystem_qubits

    def labels(self) -> list[str]:
        return [op.term.label() for op in self.operators]

    def matrices(self) -> np.ndarray:
        """Stacked dense matrices, shape (n_ops, 2^m, 2^m)."""
        cached = getattr(self, "_mat_cache", None)
        if cached is None:
            cached = np.stack([term_matrix(op.term, self.n_qubits).astype(complex)
                               for op in self.operators])
            self._mat_cache = cached
        return cached


@dataclass
class EHParameters:
    beta: np.ndarray
    time_tag: float = 0.0

    def __post_init__(self):
        self.beta = np.asarray(self.beta, dtype=float)
        if np.any(np.abs(self.beta) > BETA_BOUND + 1e-12):
            raise ValueError(f"couplings must stay within [-{BETA_BOUND}, {BETA_BOUND}]")


@dataclass
class TomographyResult:
    beta_star: EHParameters
    rho_fit: np.ndarray
    cost_final: float
    converged: bool
    iterations: int
    cost_trace: list[float] = field(default_factory=list, repr=False)


@dataclass
class FitOptions:
    g_tol: float = 1e-8
    max_iter: int = 2000
    n_restarts: int = 4
    fd_step: float = 1e-6
    seed: int = 0


def _window(factors) -> int:
    qs = sorted(factors)
    return qs[-1] - qs[0] + 1 if qs else 0


def _normalized(factors) -> tuple:
    return tuple(sorted(factors.items()))


def generate_ansatz(config: ModelConfig) -> AnsatzOperatorSet:
    """Build the local symmetry-respecting operator set described above.

    Operators are single Pauli strings with unit coefficient (hermitized
    commutators of strings reduce to strings; scalar multiples are folded
    away). Multiplication by a full three-body Gauss string always leaves
    the subsystem, so no two retained operators are Gauss-equivalent.
    Provenance records the generation stage, with products of two stage-0
    operators tagged depth 1.
    """
    m = config.subsystem_qubits
    h = build_dual_hamiltonian(config)
    s_ca, s_ac = symmetry_operators(config)

    ordered: dict[tuple, str] = {}

    def admit(factors, provenance) -> bool:
        if not factors or _window(factors) > MAX_WINDOW:
            return False
        key = _normalized(factors)
        if key in ordered:
            return False
        ordered[key] = provenance
        return True

    for t in h.terms:
        if max(t.support()) < m:
            admit(dict(t.factors), "hamiltonian-term")
    admit(dict(s_ca.factors), "boundary-symmetry")
    admit(dict(s_ac.factors), "boundary-symmetry")

    # hermitized commutator closure, two iterations
    for depth in (1, 2):
        current = [PauliTerm(1.0, dict(k)) for k in ordered]
        for a, b in itertools.combinations(current, 2):
            if commutes(a, b):
                continue
            _, factors = product(a, b)
            admit(factors, f"commutator-depth-{depth}")

    # closure under the boundary-symmetry strings (Gauss-string dressing)
    symmetry_keys = [dict(s_ca.factors), dict(s_ac.factors)]
    symmetry_keys.append(product(s_ca, s_ac)[1])
    changed = True
    while changed:
        changed = False
        for key in list(ordered):
            base = PauliTerm(1.0, dict(key))
            tag = ordered[key]
            depth = 1 if tag in ("hamiltonian-term", "boundary-symmetry") else 2
            for sk in symmetry_keys:
                _, factors = product(base, PauliTerm(1.0, sk))
                if admit(factors, f"commutator-depth-{depth}"):
                    changed = True

    # two-plaquette magnetic composites (adjacent magnetic terms commute,
    # so the closure above cannot produce them)
    mags = [t for t in h.terms
            if max(t.support()) < m and set(t.factors.values()) == {"X"}]
    mags.sort(key=lambda t: min(t.support()))
    for a, b in zip(mags, mags[1:]):
        _, factors = product(a, b)
        admit(factors, "commutator-depth-1")

    ops = []
    for key, provenance in ordered.items():
        term = PauliTerm(1.0, dict(key))
        if not (commutes(term, s_ca) and commutes(term, s_ac)):
            continue
        ops.append(AnsatzOperator(term, provenance))
    return AnsatzOperatorSet(ops, config)


class _SectorForm:
    """Ansatz reduced to the four symmetry blocks; shared by the fit paths.

    Sector blocks all share the dimension 2^L_A, so the block work is done
    on stacked (4, d_s, d_s) arrays with batched LAPACK calls.
    """

    def __init__(self, ops: AnsatzOperatorSet):
        self.ops = ops
        self.dim = 1 << ops.n_qubits
        self.sectors = sector_indices(ops.config)
        mats = ops.matrices()
        self.blocks = np.stack([mats[:, idx[:, None], idx[None, :]]
                                for idx in self.sectors], axis=1)  # (n_ops, 4, ds, ds)

    def hamiltonian_blocks(self, beta: np.ndarray) -> np.ndarray:
        return np.tensordot(beta, self.blocks, axes=(0, 0))

    def block_eigenvalues(self, beta: np.ndarray) -> np.ndarray:
        return np.linalg.eigvalsh(self.hamiltonian_blocks(beta))

    def gibbs_blocks(self, beta: np.ndarray):
        """Stacked sector blocks of exp(-H)/Z and log Z via batched eigensystems."""
        evals, vecs = np.linalg.eigh(self.hamiltonian_blocks(beta))
        emin = evals.min()
        weights = np.exp(-(evals - emin))
        z = weights.sum()
        rho = (vecs * (weights / z)[:, None, :]) @ np.conj(np.swapaxes(vecs, 1, 2))
        log_z = np.log(z) - emin
        return rho, log_z

    def embed(self, blocks) -> np.ndarray:
        rho = np.zeros((self.dim, self.dim), dtype=complex)
        for idx, blk in zip(self.sectors, blocks):
            rho[idx[:, None], idx[None, :]] = blk
        return rho


def _as_beta(beta, n_ops: int) -> np.ndarray:
    vec = beta.beta if isinstance(beta, EHParameters) else np.asarray(beta, dtype=float)
    if vec.shape != (n_ops,):
        raise ValueError(f"expected {n_ops} couplings, got shape {vec.shape}")
    return vec


def ansatz_density_matrix(beta, ops: AnsatzOperatorSet) -> np.ndarray:
    """Normalized exp(-sum_i beta_i O_i); positive with unit trace by construction.

    The eigenvalue spread is removed by subtracting the minimal eigenvalue
    before exponentiating, so couplings anywhere in the allowed box stay
    clear of overflow.
    """
    form = _form_for(ops)
    blocks, _ = form.gibbs_blocks(_as_beta(beta, len(ops)))
    return form.embed(blocks)


def _form_for(ops: AnsatzOperatorSet) -> _SectorForm:
    form = getattr(ops, "_sector_form", None)
    if form is None:
        form = _SectorForm(ops)
        ops._sector_form = form
    return form


class MeasurementCost:
    """Mean squared mismatch between record frequencies and ansatz predictions.

    Born probabilities are linear in the density matrix, so the whole
    (basis, bitstring) -> probability map is precompiled into one real
    matrix acting on the packed Hermitian blocks; a cost evaluation is then
    a batched 16x16 eigensystem plus a single matrix-vector product.
    """

    def __init__(self, records: list[MeasurementRecord], ops: AnsatzOperatorSet):
        if not records:
            raise ValueError("need at least one measurement record")
        m = ops.n_qubits
        if any(r.subsystem_size != m for r in records):
            raise ValueError("records do not match the ansatz subsystem size")
        self.form = _form_for(ops)
        self.n_ops = len(ops)
        self.freqs = np.stack([r.frequencies() for r in records])
        self.n_records, self.dim = self.freqs.shape
        units = np.stack([basis_unitary(r.basis.restrict(m)) for r in records])
        ds = len(self.form.sectors[0])
        self._iu = np.triu_indices(ds, 1)
        parts = []
        for idx in self.form.sectors:
            w = units[:, :, idx].reshape(-1, ds)      # rows: (record, bitstring)
            # Tr[M rho] with M = outer(conj(w), w), packed as
            # [diag, 2 Re upper, 2 Im upper] against [diag, Re, Im] of rho
            cross = w[:, self._iu[1]] * w[:, self._iu[0]].conj()
            parts.extend([np.abs(w) ** 2, 2 * cross.real, 2 * cross.imag])
        self._map = np.ascontiguousarray(np.hstack(parts))

    def _pack(self, blocks: np.ndarray) -> np.ndarray:
        upper = blocks[:, self._iu[0], self._iu[1]]
        return np.hstack([np.diagonal(blocks, axis1=1, axis2=2).real,
                          upper.real, upper.imag]).ravel()

    def probabilities(self, beta: np.ndarray) -> np.ndarray:
        blocks, _ = self.form.gibbs_blocks(beta)
        return (self._map @ self._pack(blocks)).reshape(self.n_records, self.dim)

    def __call__(self, beta: np.ndarray) -> float:
        delta = self.freqs - self.probabilities(beta)
        return float((delta ** 2).sum(axis=1).mean())


class DivergenceCost:
    """KL divergence D(rho_exact || rho(beta)), evaluated on the exact support."""

    def __init__(self, rho_exact: np.ndarray, ops: AnsatzOperatorSet):
        self.form = _form_for(ops)
        evals = np.linalg.eigvalsh(rho_exact)
        support = evals[evals > 1e-30]
        self.neg_entropy = float((support * np.log(support)).sum())
        mats = ops.matrices()
        self.overlaps = np.einsum("kij,ji->k", mats, rho_exact).real

    def __call__(self, beta: np.ndarray) -> float:
        evals = self.form.block_eigenvalues(beta)
        emin = evals.min()
        log_z = np.log(np.exp(-(evals - emin)).sum()) - emin
        return float(self.neg_entropy + beta @ self.overlaps + log_z)


def tomography_cost(beta, records: list[MeasurementRecord], ops: AnsatzOperatorSet) -> float:
    return MeasurementCost(records, ops)(_as_beta(beta, len(ops)))


class _NonFiniteCost(RuntimeError):
    pass


def _fd_gradient(fun, x: np.ndarray, step: float) -> np.ndarray:
    grad = np.empty_like(x)
    for i in range(len(x)):
        e = np.zeros_like(x)
        e[i] = step
        grad[i] = (fun(x + e) - fun(x - e)) / (2 * step)
    return grad


def _projected_gradient_norm(x, grad, bound) -> float:
    pg = grad.copy()
    pg[(x <= -bound + 1e-12) & (grad > 0)] = 0.0
    pg[(x >= bound - 1e-12) & (grad < 0)] = 0.0
    return float(np.max(np.abs(pg))) if len(pg) else 0.0


def _minimize(cost, n_params: int, opts: FitOptions) -> TomographyResult:
    """Multi-start box-constrained quasi-Newton with numerical gradients."""

    def guarded(x):
        val = cost(x)
        if not np.isfinite(val):
            raise _NonFiniteCost
        return val

    def grad(x):
        return _fd_gradient(guarded, x, opts.fd_step)

    rng = substream(opts.seed, "fit-restarts")
    starts = [np.zeros(n_params)]
    starts += [rng.uniform(-1.0, 1.0, size=n_params) for _ in range(opts.n_restarts)]

    best = None
    total_iters = 0
    for x0 in starts:
        trace = []
        try:
            res = scipy.optimize.minimize(
                guarded, x0, jac=grad, method="L-BFGS-B",
                bounds=[(-BETA_BOUND, BETA_BOUND)] * n_params,
                callback=lambda xk: trace.append(cost(xk)),
                options={"maxiter": opts.max_iter, "ftol": 1e-14, "gtol": opts.g_tol},
            )
        except _NonFiniteCost:
            continue
        total_iters += res.nit
        pg_norm = _projected_gradient_norm(res.x, np.asarray(res.jac), BETA_BOUND)
        small_step = len(trace) >= 2 and abs(trace[-1] - trace[-2]) < 1e-12
        converged = bool(res.success) or pg_norm < opts.g_tol or small_step
        if best is None or res.fun < best[0]:
            best = (res.fun, res.x, converged, trace)

    if best is None:
        return TomographyResult(EHParameters(np.zeros(n_params)), np.empty(0),
                                float("nan"), False, total_iters)
    cost_final, x, converged, trace = best
    return TomographyResult(EHParameters(x.copy()), np.empty(0), float(cost_final),
                            converged, total_iters, trace)


def fit_eh_from_measurements(records: list[MeasurementRecord], ops: AnsatzOperatorSet,
                             opts: FitOptions | None = None) -> TomographyResult:
    """Fit couplings to finite-statistics randomized-measurement records."""
    opts = opts or FitOptions()
    cost = MeasurementCost(records, ops)
    result = _minimize(cost, len(ops), opts)
    result.rho_fit = ansatz_density_matrix(result.beta_star, ops)
    return result


def fit_eh_infinite(rho_exact: np.ndarray, ops: AnsatzOperatorSet,
                    opts: FitOptions | None = None) -> TomographyResult:
    """Fit couplings against an exactly known reduced state (infinite shots)."""
    opts = opts or FitOptions()
    cost = DivergenceCost(rho_exact, ops)
    result = _minimize(cost, len(ops), opts)
    result.rho_fit = ansatz_density_matrix(result.beta_star, ops)
    return result


def write_fit(path, result: TomographyResult, ops: AnsatzOperatorSet) -> None:
    lines = [
        "# entanglement-hamiltonian fit",
        f"converged {int(result.converged)}",
        f"iterations {result.iterations}",
        f"cost {result.cost_final:.17g}",
        f"time_tag {result.beta_star.time_tag:.17g}",
        f"operators {len(ops)}",
    ]
    for i, (op, b) in enumerate(zip(ops.operators, result.beta_star.beta)):
        factors = " ".join(f"{ax}{q}" for q, ax in sorted(op.term.factors.items()))
        lines.append(f"op {i} {op.provenance} {factors} beta {b:.17g}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_fit(path, ops: AnsatzOperatorSet) -> TomographyResult:
    kv = {}
    betas = np.zeros(len(ops))
    for line in Path(path).read_text().splitlines():
        if line.startswith("#") or not line.strip():
            continue
        parts = line.split()
        if parts[0] == "op":
            betas[int(parts[1])] = float(parts[-1])
        else:
            kv[parts[0]] = parts[1]
    result = TomographyResult(
        beta_star=EHParameters(betas, time_tag=float(kv.get("time_tag", 0.0))),
        rho_fit=np.empty(0),
        cost_final=float(kv["cost"]),
        converged=bool(int(kv["converged"])),
        iterations=int(kv["iterations"]),
    )
    result.rho_fit = ansatz_density_matrix(result.beta_star, ops)
    return result


def save_density_matrix(path, rho: np.ndarray) -> None:
    with open(path, "w") as fh:
        fh.write(f"dim {rho.shape[0]}\n")
        for row in rho:
            fh.write(" ".join(f"{v.real:.17g}{v.imag:+.17g}j" for v in row) + "\n")


def load_density_matrix(path) -> np.ndarray:
    lines = Path(path).read_text().splitlines()
    dim = int(lines[0].split()[1])
    rho = np.array([[complex(tok) for tok in line.split()] for line in lines[1:dim + 1]])
    return rho
