import numpy as np
import pytest

from gradlab._types import TaskGradients


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def columns(*cols, level="param") -> TaskGradients:
    """TaskGradients whose columns are the given vectors."""
    return TaskGradients(np.array(cols, dtype=float).T, level)
