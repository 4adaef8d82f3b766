import numpy as np
import pytest

from survcut import SurvivalDataset, validate_dataset


def make_survival(seed: int, n: int = 120, p: int = 2,
                  censor: float = 0.3) -> SurvivalDataset:
    """Small generic right-censored sample with no special structure."""
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, p))
    t = rng.exponential(1.0, n) + 1e-3
    d = (rng.random(n) > censor).astype(np.float64)
    if not d.any():
        d[0] = 1.0
    return validate_dataset(x, t, d)


@pytest.fixture
def rng():
    return np.random.default_rng(0)
