import numpy as np
import pytest

#: The (p, epsilon) grid used by cross-checking properties throughout the suite.
PARAM_GRID = [(p, e) for p in (0.1, 0.2, 0.3, 0.45) for e in (0.05, 0.2, 0.35, 0.45)]


def random_word(rng: np.random.Generator, length: int) -> np.ndarray:
    return rng.choice(np.array([-1, 1], dtype=np.int8), size=length)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240817)
