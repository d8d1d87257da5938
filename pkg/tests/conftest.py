import numpy as np
import pytest

from telegate.states import DensityMatrix, PureState


def ginibre_dm(n_qubits: int, rng: np.random.Generator) -> DensityMatrix:
    """Random full-rank density matrix (Ginibre ensemble)."""
    d = 2**n_qubits
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    m = g @ g.conj().T
    return DensityMatrix(m / np.trace(m))


def random_pure(n_qubits: int, rng: np.random.Generator) -> PureState:
    d = 2**n_qubits
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return PureState(v / np.linalg.norm(v))


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
