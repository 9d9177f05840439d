import math

import numpy as np
import pytest

from z2chaos.circuits import (PI, Circuit, Gate, apply_circuit, build_trotter_circuit,
                              decompose_zz, gate_matrix, load_circuit, reduce_ms_angle)
from z2chaos.lattice import gauss_operators, sample_initial_state
from z2chaos.pauli import terms_matrix
from z2chaos.statevector import exact_evolve, expectation, prepare


def circuit_unitary(gates, n):
    dim = 1 << n
    c = Circuit(n, list(gates))
    u = np.zeros((dim, dim), dtype=complex)
    for k in range(dim):
        e = np.zeros(dim, dtype=complex)
        e[k] = 1.0
        u[:, k] = apply_circuit(e, c)
    return u


def same_up_to_phase(a, b, tol=1e-12):
    k = np.unravel_index(np.argmax(np.abs(b)), b.shape)
    if abs(b[k]) < 1e-14:
        return np.max(np.abs(a - b)) < tol
    phase = a[k] / b[k]
    return np.max(np.abs(a - phase * b)) < tol and abs(abs(phase) - 1) < tol


def test_gate_validation():
    with pytest.raises(ValueError):
        Gate("RXX", (1,), 0.3)
    with pytest.raises(ValueError):
        Gate("RXX", (1, 1), 0.3)
    with pytest.raises(ValueError):
        Gate("RX", (0, 1), 0.3)
    with pytest.raises(ValueError):
        Gate("H", (0,), 0.0)


def test_rotation_conventions():
    a = 0.7
    x = np.array([[0, 1], [1, 0]])
    np.testing.assert_allclose(gate_matrix(Gate("RX", (0,), a)),
                               math.cos(a / 2) * np.eye(2) - 1j * math.sin(a / 2) * x,
                               atol=1e-15)
    xx = np.fliplr(np.eye(4))
    np.testing.assert_allclose(gate_matrix(Gate("RXX", (0, 1), a)),
                               math.cos(a) * np.eye(4) - 1j * math.sin(a) * xx,
                               atol=1e-15)


def test_zz_decomposition_identity_angle_zero():
    u = circuit_unitary(decompose_zz(0, 1, 0.0), 2)
    assert same_up_to_phase(u, np.eye(4))


def test_zz_decomposition_matches_exponential():
    angle = PI / 8
    u = circuit_unitary(decompose_zz(0, 1, angle), 2)
    zz = np.diag([1.0, -1.0, -1.0, 1.0])
    target = np.cos(angle) * np.eye(4) - 1j * np.sin(angle) * zz
    assert same_up_to_phase(u, target, tol=1e-12)
    # composite commutes with its diagonal target
    np.testing.assert_allclose(u @ zz, zz @ u, atol=1e-12)


def test_ms_reduction_cases():
    assert reduce_ms_angle(0.5) == (0.5, False)
    angle, flips = reduce_ms_angle(PI)
    assert angle == pytest.approx(0.0, abs=1e-15) and not flips
    angle, flips = reduce_ms_angle(0.6 * PI)
    assert angle == pytest.approx(0.1 * PI) and flips
    angle, flips = reduce_ms_angle(-0.6 * PI)
    assert angle == pytest.approx(-0.1 * PI) and flips
    # boundary belongs to the lower case
    assert reduce_ms_angle(PI / 4) == (PI / 4, False)


def test_ms_reduction_unitary_equivalence():
    rng = np.random.default_rng(11)
    for angle in rng.uniform(-2 * PI, 2 * PI, size=300):
        reduced, flips = reduce_ms_angle(angle)
        assert abs(reduced) <= PI / 4 + 1e-12
        gates = [Gate("RXX", (0, 1), reduced)]
        if flips:
            gates += [Gate("RX", (0,), PI), Gate("RX", (1,), PI)]
        u = circuit_unitary(gates, 2)
        u0 = circuit_unitary([Gate("RXX", (0, 1), angle)], 2)
        assert same_up_to_phase(u, u0, tol=1e-12)


def test_trotter_gate_budget(default_config, default_h):
    c = build_trotter_circuit(default_h, 0.5, 1)
    assert c.count("RXX") == 12
    for g in c.gates:
        if g.kind == "RXX":
            assert abs(g.angle) <= PI / 4 + 1e-12
    c4 = build_trotter_circuit(default_h, 0.5, 4)
    assert c4.count("RXX") == 48


def test_trotter_zero_time_is_identity(small_config, small_h):
    psi = prepare(sample_initial_state(small_config, 0))
    c = build_trotter_circuit(small_h, 0.0, 2)
    np.testing.assert_allclose(apply_circuit(psi, c), psi, atol=1e-12)


def test_trotter_rejects_zero_steps(small_h):
    with pytest.raises(ValueError):
        build_trotter_circuit(small_h, 1.0, 0)


def test_single_step_matches_family_exponentials(small_config, small_h):
    import scipy.linalg
    n = small_config.n_qubits
    dt = 0.3
    groups = {"Z": [], "ZZ": [], "X": [], "XX": []}
    for t in small_h.terms:
        axes = set(t.factors.values())
        groups[("Z" if axes == {"Z"} else "X") * t.weight()].append(t)
    u_ref = np.eye(1 << n, dtype=complex)
    for fam in ("Z", "ZZ", "X", "XX"):
        u_ref = scipy.linalg.expm(-1j * dt * terms_matrix(groups[fam], n).astype(complex)) @ u_ref
    u = circuit_unitary(build_trotter_circuit(small_h, dt, 1).gates, n)
    assert same_up_to_phase(u, u_ref, tol=1e-10)


def test_trotter_fidelity_frozen_operating_point(default_config, default_h):
    # g=0.85, gt=0.425, 4 steps; oracle-run value 0.9383, frozen with margin
    psi = prepare(sample_initial_state(default_config, 1))
    t = 0.425 / default_config.g
    psi_t = apply_circuit(psi, build_trotter_circuit(default_h, t, 4))
    psi_e = exact_evolve(psi, default_h, t)
    fidelity = abs(np.vdot(psi_t, psi_e)) ** 2
    assert fidelity > 0.93
    assert fidelity == pytest.approx(0.9383, abs=0.002)


def test_trotter_circuit_preserves_gauss_any_angles(small_config, small_h):
    psi = prepare(sample_initial_state(small_config, 5))
    for t in (0.7, 3.9, 11.0):
        out = apply_circuit(psi, build_trotter_circuit(small_h, t, 3))
        for g in gauss_operators(small_config):
            assert expectation(out, g) == pytest.approx(1.0, abs=1e-10)
        assert abs(np.linalg.norm(out) - 1.0) < 1e-12


def test_first_order_error_scaling(small_config, small_h):
    psi = prepare(sample_initial_state(small_config, 3))
    t = 1.7 / small_config.g
    exact = exact_evolve(psi, small_h, t)
    errors = []
    for n_steps in (4, 8, 16, 32):
        approx = apply_circuit(psi, build_trotter_circuit(small_h, t, n_steps))
        f = abs(np.vdot(approx, exact))
        errors.append(np.sqrt(max(0.0, 2 - 2 * f)))
    slope = np.polyfit(np.log([4, 8, 16, 32]), np.log(errors), 1)[0]
    assert slope == pytest.approx(-1.0, abs=0.2)


def test_circuit_inverse_roundtrip(small_config, small_h):
    psi = prepare(sample_initial_state(small_config, 6))
    c = build_trotter_circuit(small_h, 2.1, 3)
    out = apply_circuit(apply_circuit(psi, c), c.inverse())
    np.testing.assert_allclose(out, psi, atol=1e-10)


def test_empty_circuit_is_identity():
    psi = np.array([0.6, 0.8j], dtype=complex)
    np.testing.assert_allclose(apply_circuit(psi, Circuit(1)), psi)


def test_circuit_text_round_trip(tmp_path, small_h):
    c = build_trotter_circuit(small_h, 0.8, 1)
    path = tmp_path / "circuit.txt"
    c.save(path)
    loaded = load_circuit(path)
    assert loaded.n_qubits == c.n_qubits
    assert loaded.gates == c.gates
    first = path.read_text().splitlines()[1]
    kind, *rest = first.split()
    assert kind in ("RX", "RY", "RZ", "RXX")
    float(rest[-1])  # angle field parses


def test_apply_circuit_norm_preservation(small_config, small_h):
    rng = np.random.default_rng(2)
    psi = rng.standard_normal(1 << small_config.n_qubits) * 1j
    psi += rng.standard_normal(1 << small_config.n_qubits)
    psi /= np.linalg.norm(psi)
    out = apply_circuit(psi, build_trotter_circuit(small_h, 4.2, 2))
    assert abs(np.linalg.norm(out) - 1.0) < 1e-12
