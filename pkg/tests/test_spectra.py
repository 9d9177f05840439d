import numpy as np
import pytest

from z2chaos.lattice import sample_initial_state, sector_indices
from z2chaos.spectra import (default_theta_grid, egrd, entanglement_spectrum,
                             entropy_decomposition, esff, fit_ramp, gap_ratios,
                             reference_distribution, sample_reference_ratios)
from z2chaos.rng import substream
from z2chaos.statevector import exact_evolve, partial_trace, prepare


def test_pure_state_spectrum(small_config):
    m = small_config.subsystem_qubits
    rho = np.zeros((1 << m, 1 << m), dtype=complex)
    rho[0, 0] = 1.0
    spec = entanglement_spectrum(rho, small_config)
    assert spec.total_rank == 1
    assert spec.sectors[0][0] == pytest.approx(0.0, abs=1e-12)
    assert all(len(s) == 0 for s in spec.sectors[1:])


def test_maximally_mixed_spectrum(default_config):
    rho = np.eye(64, dtype=complex) / 64
    spec = entanglement_spectrum(rho, default_config)
    assert spec.total_rank == 64
    for xi in spec.sectors:
        assert len(xi) == 16
        np.testing.assert_allclose(xi, np.log(64), atol=1e-12)


def test_retained_weight_bounded(small_config, small_h):
    psi = exact_evolve(prepare(sample_initial_state(small_config, 1)), small_h, 2.0)
    spec = entanglement_spectrum(partial_trace(psi, small_config.subsystem_qubits),
                                 small_config)
    total = sum(np.exp(-xi).sum() for xi in spec.sectors)
    assert total <= 1 + 1e-8


def test_cutoff_sensitivity_brackets(small_config, small_h):
    # early-time state has levels at machine-precision scale
    psi = exact_evolve(prepare(sample_initial_state(small_config, 2)), small_h, 0.3)
    rho = partial_trace(psi, small_config.subsystem_qubits)
    ranks = [entanglement_spectrum(rho, small_config, cutoff=c).total_rank
             for c in (1e-13, 1e-15, 1e-17)]
    assert ranks[0] <= ranks[1] <= ranks[2]


def test_gap_ratio_direct_examples():
    np.testing.assert_allclose(gap_ratios([0.0, 1.0, 3.0]), [0.5])
    np.testing.assert_allclose(gap_ratios([0.0, 1.0, 2.0, 3.0]), [1.0, 1.0])
    np.testing.assert_allclose(gap_ratios([0.0, 1.0, 1.0, 3.0]), [0.0, 0.0])
    assert len(gap_ratios([0.0, 1.0])) == 0
    # double degeneracy: both adjacent gaps vanish -> tie rule r = 1
    np.testing.assert_allclose(gap_ratios([1.0, 1.0, 1.0]), [1.0])


def test_gap_ratio_affine_invariance():
    rng = substream(1, "affine")
    xi = np.sort(rng.uniform(0, 5, size=24))
    base = gap_ratios(xi)
    np.testing.assert_allclose(gap_ratios(3.7 * xi + 11.0), base, atol=1e-12)


def test_egrd_histogram_properties():
    ratios = np.full(100, 0.4)
    hist = egrd(ratios)
    assert hist.mean == pytest.approx(0.4)
    assert np.count_nonzero(hist.density) == 1
    assert np.sum(hist.density) * hist.bin_width == pytest.approx(1.0, abs=1e-10)
    rng = substream(2, "pool")
    hist2 = egrd(rng.uniform(0, 1, size=5000))
    assert np.sum(hist2.density) * hist2.bin_width == pytest.approx(1.0, abs=1e-10)
    assert len(hist2.density) == 12


def test_poisson_surmise_sampled_mean():
    rng = substream(3, "poisson")
    ratios = sample_reference_ratios("poisson", rng, n_levels=10 ** 5)
    assert ratios.mean() == pytest.approx(2 * np.log(2) - 1, abs=0.005)


def test_reference_distribution_means_and_normalization():
    import scipy.integrate
    expected = {"poisson": 2 * np.log(2) - 1,
                "goe": 4 - 2 * np.sqrt(3),
                "gue": 2 * np.sqrt(3) / np.pi - 0.5}
    for kind, target in expected.items():
        density, mean = reference_distribution(kind)
        assert mean == pytest.approx(target, abs=1e-9)
        norm, _ = scipy.integrate.quad(density, 0, 1)
        assert norm == pytest.approx(1.0, abs=1e-9)
    with pytest.raises(ValueError):
        reference_distribution("gse")


def test_esff_trivial_and_two_level():
    theta = default_theta_grid(50)
    from z2chaos.spectra import EntanglementSpectrum
    spec = EntanglementSpectrum([np.array([0.7]), np.array([]),
                                 np.array([0.0, 0.9]), np.array([])],
                                [1, 0, 2, 0], 3, 1e-15)
    curves = esff(spec, theta)
    np.testing.assert_allclose(curves[0], np.ones_like(theta))
    assert curves[1] is None
    np.testing.assert_allclose(curves[2], (1 + np.cos(0.9 * theta)) / 2, atol=1e-12)


def test_esff_normalization_and_plateau(default_config):
    rng = substream(4, "esff")
    xi = np.sort(rng.uniform(0, 8, size=16))
    from z2chaos.spectra import EntanglementSpectrum
    spec = EntanglementSpectrum([xi, np.array([]), np.array([]), np.array([])],
                                [16, 0, 0, 0], 16, 1e-15)
    theta = np.concatenate([[0.0], np.logspace(2, 3, 400)])
    curve = esff(spec, theta)[0]
    assert curve[0] == pytest.approx(1.0, abs=1e-12)
    assert curve[1:].mean() == pytest.approx(1 / 16, rel=0.25)


def test_fit_ramp_exact_power_law():
    theta = np.logspace(-1, 2, 200)
    fit = fit_ramp(theta, 0.03 * theta ** 0.6, (0.5, 20.0))
    assert fit.kappa == pytest.approx(0.6, abs=1e-6)
    assert fit.monotone
    flat = fit_ramp(theta, np.full_like(theta, 0.25), (0.5, 20.0))
    assert flat.kappa == pytest.approx(0.0, abs=1e-6)


def test_fit_ramp_flags_non_monotone():
    theta = np.logspace(-1, 2, 100)
    fit = fit_ramp(theta, 1.0 / theta, (0.5, 20.0))
    assert not fit.monotone
    assert fit.kappa == pytest.approx(-1.0, abs=1e-6)


def test_entropy_decomposition_maximally_mixed(default_config):
    rho = np.eye(64, dtype=complex) / 64
    dec = entropy_decomposition(rho, default_config)
    np.testing.assert_allclose(dec.sector_weights, 0.25, atol=1e-12)
    assert dec.s_symmetry == pytest.approx(np.log(4), abs=1e-12)
    assert dec.s_distillable == pytest.approx(np.log(16), abs=1e-12)
    assert dec.s_vn == pytest.approx(np.log(64), abs=1e-12)


def test_entropy_decomposition_pure_single_sector(default_config):
    idx = sector_indices(default_config)[2][3]
    rho = np.zeros((64, 64), dtype=complex)
    rho[idx, idx] = 1.0
    dec = entropy_decomposition(rho, default_config)
    assert dec.s_vn == pytest.approx(0.0, abs=1e-12)
    assert dec.s_symmetry == pytest.approx(0.0, abs=1e-12)
    assert dec.sector_weights[2] == pytest.approx(1.0)


def test_entropy_identity_on_evolved_states(small_config, small_h):
    for seed, t in ((1, 0.8), (2, 2.9), (3, 7.0)):
        psi = exact_evolve(prepare(sample_initial_state(small_config, seed)), small_h, t)
        rho = partial_trace(psi, small_config.subsystem_qubits)
        dec = entropy_decomposition(rho, small_config)
        assert dec.s_vn == pytest.approx(dec.s_symmetry + dec.s_distillable, abs=1e-10)


def test_entropy_identity_on_random_density_matrix(default_config):
    rng = substream(6, "rand-rho")
    a = rng.standard_normal((64, 64)) + 1j * rng.standard_normal((64, 64))
    rho = a @ a.conj().T
    rho /= np.trace(rho).real
    dec = entropy_decomposition(rho, default_config)
    assert dec.s_vn == pytest.approx(dec.s_symmetry + dec.s_distillable, abs=1e-10)
