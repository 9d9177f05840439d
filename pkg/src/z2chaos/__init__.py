"""Quantum-chaos diagnostics for a (2+1)D Z2 lattice gauge theory.

Library layout:
    lattice      dual plaquette-chain model, Gauss laws, symmetry sectors
    statevector  dense exact evolution and reduced density matrices
    circuits     Trotter compilation to rotation/MS gates
    measurement  randomized-measurement simulation and count records
    tomography   entanglement-Hamiltonian ansatz and fits
    spectra      gap ratios, spectral form factor, entropy decomposition
    pipeline     reproduction runs, bootstrap errors, manifests
    plots        figure rendering for run outputs
"""

__version__ = "0.1.0"

from .lattice import (BasisState, HamiltonianSpec, ModelConfig,
                      build_dual_hamiltonian, gauss_operators, sample_initial_state,
                      sector_label, symmetry_operators)
from .pauli import PauliTerm
from .statevector import exact_evolve, expectation, partial_trace, prepare
from .circuits import (Circuit, Gate, apply_circuit, build_trotter_circuit,
                       decompose_zz, reduce_ms_angle)
from .measurement import (MeasurementRecord, RandomBasis, basis_rotation_circuit,
                          exact_basis_probabilities, sample_cue_basis,
                          simulate_measurements)
from .tomography import (AnsatzOperatorSet, EHParameters, TomographyResult,
                         ansatz_density_matrix, fit_eh_from_measurements,
                         fit_eh_infinite, generate_ansatz, tomography_cost)
from .spectra import (EntanglementSpectrum, egrd, entanglement_spectrum,
                      entropy_decomposition, esff, fit_ramp, gap_ratios,
                      reference_distribution)
from .pipeline import RunConfig, RunManifest, bootstrap, run_pipeline

__all__ = [name for name in dir() if not name.startswith("_")]
