import numpy as np
import pytest

from cimtile.config import default_config
from cimtile.core import MatrixTile


@pytest.fixture
def config():
    return default_config()


@pytest.fixture
def all_pairs_tiles():
    """16x16 operand pair covering every (a, b) combination: a varies by
    row, b by column."""
    grid = np.arange(16, dtype=np.uint8)
    a = MatrixTile(np.repeat(grid, 16).reshape(16, 16))
    b = MatrixTile(np.tile(grid, 16).reshape(16, 16))
    return a, b


def random_tile(rng, n):
    return MatrixTile(rng.integers(0, 16, size=(n, n), dtype=np.uint8))
