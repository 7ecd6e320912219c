import math
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from qcomp.netgen import from_vectors  # noqa: E402


def random_channels(rng, n_c, n_u, n_b, noise_var=1.0, spread_db=0.0):
    """iid CN(0,1) fading with optional per-link gains drawn over ``spread_db``."""
    shape = (n_c, n_c, n_u, n_b)
    h = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2)
    if spread_db:
        gains = 10 ** (-rng.uniform(0, spread_db, shape[:3]) / 10)
        h = h * np.sqrt(gains)[..., None]
    return from_vectors(h, noise_var)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
