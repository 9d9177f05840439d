"""Entanglement-spectrum statistics: gap ratios, form factor, entropies.

All logarithms are natural. Spectra are resolved per symmetry sector; the
reduced state of a Gauss-respecting evolved state is block diagonal over
the four sectors, and level statistics mixing different sectors would bury
the repulsion signal under uncorrelated cross-sector gaps.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.integrate

from .lattice import ModelConfig, sector_indices

DEFAULT_CUTOFF = 1e-15
EGRD_BIN_WIDTH = 1.0 / 12.0


@dataclass
class EntanglementSpectrum:
    """Per-sector levels xi = -log p, ascending, after cutoff regularization."""

    sectors: list[np.ndarray]
    effective_ranks: list[int]
    total_rank: int
    cutoff_used: float | None

    def pooled_ratios(self) -> np.ndarray:
        parts = [gap_ratios(xi) for xi in self.sectors]
        return np.concatenate(parts) if parts else np.array([])


@dataclass
class RampFit:
    kappa: float
    uncertainty: float
    monotone: bool


@dataclass
class EntropyDecomposition:
    s_vn: float
    s_symmetry: float
    s_distillable: float
    sector_weights: np.ndarray


def entanglement_spectrum(rho: np.ndarray, config: ModelConfig,
                          cutoff: float | None = DEFAULT_CUTOFF) -> EntanglementSpectrum:
    """Sector-resolved entanglement spectrum of a subsystem density matrix.

    Eigenvalues below the cutoff sit at machine-precision noise level for
    early-time states and are discarded; the retained count per sector is
    the effective rank. cutoff=None keeps every level (appropriate for
    fitted Gibbs states, which are full rank by construction).
    """
    if cutoff is not None and not 0.0 < cutoff < 1.0:
        raise ValueError("cutoff must lie in (0, 1)")
    sectors = []
    ranks = []
    for idx in sector_indices(config):
        block = rho[idx[:, None], idx[None, :]]
        probs = np.linalg.eigvalsh(block)
        if cutoff is not None:
            probs = probs[probs >= cutoff]
        else:
            probs = probs[probs > 0.0]
        xi = np.sort(-np.log(probs))
        sectors.append(xi)
        ranks.append(len(xi))
    return EntanglementSpectrum(sectors, ranks, sum(ranks), cutoff)


def gap_ratios(xi) -> np.ndarray:
    """min/max of adjacent gaps; empty below three levels, r=1 on double ties."""
    xi = np.asarray(xi, dtype=float)
    if len(xi) < 3:
        return np.array([])
    gaps = np.clip(np.diff(xi), 0.0, None)
    lo, hi = gaps[:-1], gaps[1:]
    both_zero = (lo == 0) & (hi == 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.minimum(lo, hi) / np.maximum(lo, hi)
    r[both_zero] = 1.0
    return r


@dataclass
class GapRatioHistogram:
    bin_centers: np.ndarray
    density: np.ndarray
    mean: float
    n_ratios: int
    bin_width: float = EGRD_BIN_WIDTH


def egrd(ratios, bin_width: float = EGRD_BIN_WIDTH) -> GapRatioHistogram:
    """Normalized gap-ratio distribution over the pooled sample."""
    ratios = np.asarray(ratios, dtype=float)
    if len(ratios) == 0:
        raise ValueError("cannot histogram an empty ratio pool")
    edges = np.arange(0.0, 1.0 + bin_width / 2, bin_width)
    counts, _ = np.histogram(np.clip(ratios, 0.0, 1.0 - 1e-12), bins=edges)
    density = counts / (len(ratios) * bin_width)
    centers = (edges[:-1] + edges[1:]) / 2
    return GapRatioHistogram(centers, density, float(ratios.mean()), len(ratios))


def reference_distribution(kind: str):
    """Folded gap-ratio density on [0, 1] and its mean for reference ensembles.

    Poisson levels give P(r) = 2/(1+r)^2. GOE/GUE use the Wigner-like
    surmise P(r) oc (r+r^2)^b / (1+r+r^2)^(1+3b/2) with b = 1, 2, folded
    onto [0, 1] (the surmise is self-dual under r -> 1/r).
    """
    kind = kind.lower()
    if kind == "poisson":
        def density(r):
            return 2.0 / (1.0 + np.asarray(r, dtype=float)) ** 2
    elif kind in ("goe", "gue"):
        b = 1 if kind == "goe" else 2
        norm, _ = scipy.integrate.quad(
            lambda r: (r + r * r) ** b / (1 + r + r * r) ** (1 + 1.5 * b), 0, np.inf)

        def density(r):
            r = np.asarray(r, dtype=float)
            return 2.0 * (r + r * r) ** b / (1 + r + r * r) ** (1 + 1.5 * b) / norm
    else:
        raise ValueError(f"unknown reference ensemble {kind!r}")
    mean, _ = scipy.integrate.quad(lambda r: r * density(r), 0.0, 1.0)
    return density, mean


def sample_reference_ratios(kind: str, rng: np.random.Generator,
                            n_levels: int = 10 ** 5, dim: int = 200,
                            n_matrices: int = 500) -> np.ndarray:
    """Monte-Carlo gap ratios from actual level samples (the surmise oracle).

    Poisson draws i.i.d. levels; GOE/GUE diagonalize random matrices and use
    the middle half of each spectrum to stay clear of the spectral edge.
    """
    kind = kind.lower()
    if kind == "poisson":
        levels = np.sort(rng.uniform(0.0, 1.0, size=n_levels))
        return gap_ratios(levels)
    pool = []
    for _ in range(n_matrices):
        a = rng.standard_normal((dim, dim))
        if kind == "gue":
            a = a + 1j * rng.standard_normal((dim, dim))
        h = (a + a.conj().T) / 2
        evals = np.linalg.eigvalsh(h)
        bulk = evals[dim // 4: 3 * dim // 4]
        pool.append(gap_ratios(bulk))
    return np.concatenate(pool)


def default_theta_grid(n_points: int = 200) -> np.ndarray:
    return np.logspace(-2, 3, n_points)


def esff(spectrum: EntanglementSpectrum, theta_grid) -> list[np.ndarray | None]:
    """Per-sector form factor |sum_l exp(i theta xi_l)|^2 / rank^2.

    Sectors with no retained level cannot be normalized and yield None;
    callers exclude them from averages.
    """
    theta = np.asarray(theta_grid, dtype=float)
    curves = []
    for xi in spectrum.sectors:
        if len(xi) == 0:
            curves.append(None)
            continue
        amp = np.exp(1j * np.outer(theta, xi)).sum(axis=1)
        curves.append(np.abs(amp) ** 2 / len(xi) ** 2)
    return curves


def fit_ramp(theta, f_curve, window: tuple[float, float]) -> RampFit:
    """Log-log slope of the form-factor ramp inside the window.

    The uncertainty is the half-spread of slopes re-fit with each window
    endpoint shifted by +-25%. A non-monotone window is flagged but the fit
    is still returned.
    """
    theta = np.asarray(theta, dtype=float)
    f_curve = np.asarray(f_curve, dtype=float)

    def slope(lo, hi):
        mask = (theta >= lo) & (theta <= hi) & (f_curve > 0)
        if mask.sum() < 2:
            return None
        return np.polyfit(np.log(theta[mask]), np.log(f_curve[mask]), 1)[0]

    lo, hi = window
    kappa = slope(lo, hi)
    if kappa is None:
        raise ValueError("ramp window contains fewer than two usable points")
    variants = [slope(lo * sl, hi * sh)
                for sl in (0.75, 1.0, 1.25) for sh in (0.75, 1.0, 1.25)]
    variants = [s for s in variants if s is not None]
    uncertainty = (max(variants) - min(variants)) / 2 if variants else 0.0
    in_window = f_curve[(theta >= lo) & (theta <= hi)]
    monotone = bool(len(in_window) < 2 or in_window[-1] >= in_window[0])
    return RampFit(float(kappa), float(uncertainty), monotone)


def entropy_decomposition(rho: np.ndarray, config: ModelConfig) -> EntropyDecomposition:
    """Split S_vN into the sector-weight entropy and the distillable part.

    The state is projected onto its symmetry blocks first (a no-op for
    physical reduced states, which are block diagonal), so the identity
    S_vN = S_sym + S_dist holds for any Hermitian unit-trace input.
    """
    weights = []
    sector_entropies = []
    total = 0.0
    for idx in sector_indices(config):
        block = rho[idx[:, None], idx[None, :]]
        p_s = float(np.trace(block).real)
        weights.append(p_s)
        probs = np.linalg.eigvalsh(block)
        probs = probs[probs > 1e-30]
        total += float(-(probs * np.log(probs)).sum())
        if p_s > 1e-30:
            normed = probs / p_s
            sector_entropies.append(float(-(normed * np.log(normed)).sum()))
        else:
            sector_entropies.append(0.0)
    weights = np.asarray(weights)
    mask = weights > 1e-30
    s_sym = float(-(weights[mask] * np.log(weights[mask])).sum())
    s_dist = float(sum(p * s for p, s in zip(weights, sector_entropies)))
    return EntropyDecomposition(total, s_sym, s_dist, weights)
