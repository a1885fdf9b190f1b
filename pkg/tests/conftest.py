import numpy as np
import pytest

import formsim as fs


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20260808)


@pytest.fixture(scope="session")
def chain5():
    return fs.validate_spanning_tree(5, [(1, 2), (2, 3), (3, 4), (4, 5)])


def chain_tree(n):
    return fs.validate_spanning_tree(n, [(k, k + 1) for k in range(1, n)])


@pytest.fixture(scope="session")
def adaptive_engine():
    """Warm engine for the torque-level pentagon scenario."""
    eng = fs.Engine(fs.get_preset("adaptive-pentagon"))
    if eng.driver == "jit":
        eng.advance(eng.initial_state(), 0.0, 2)
    return eng
