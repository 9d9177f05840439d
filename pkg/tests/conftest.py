import pytest

from z2chaos.lattice import ModelConfig, build_dual_hamiltonian


@pytest.fixture(scope="session")
def default_config():
    return ModelConfig()


@pytest.fixture(scope="session")
def small_config():
    # 8 qubits; large enough for every structural feature, fast to diagonalize
    return ModelConfig(l_x=6, l_a=2, g=0.85)


@pytest.fixture(scope="session")
def default_h(default_config):
    return build_dual_hamiltonian(default_config)


@pytest.fixture(scope="session")
def small_h(small_config):
    return build_dual_hamiltonian(small_config)
