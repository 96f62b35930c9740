import numpy as np
import pytest

from starspin.config import default_molecule
from starspin.core import Spin, SpinSystem

J_CC_CS = 2.0 * np.pi * 38.4


@pytest.fixture(scope="session")
def molecule():
    return default_molecule()


@pytest.fixture(scope="session")
def chain3():
    """Bare three-carbon sensor chain with the shipped couplings."""
    return SpinSystem(
        (
            Spin("CC", "13C", 62.6),
            Spin("CS1", "13C", 25.5),
            Spin("CS2", "13C", 25.5),
        ),
        {("CC", "CS1"): J_CC_CS, ("CC", "CS2"): J_CC_CS},
        125.76e6,
    )


def random_density_matrix(rng: np.random.Generator, n_spins: int) -> np.ndarray:
    dim = 2**n_spins
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    m = a @ a.conj().T
    return m / np.trace(m)
