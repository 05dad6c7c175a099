import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from viraldyn.sampling import draw_params

settings.register_profile(
    "default",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

DRAW_SEED = 20240101


@pytest.fixture(scope="session")
def no_ade_draws():
    """500 beta1 = 0 draws within 3 decades of baseline, shared by property tests."""
    return draw_params(np.random.default_rng(DRAW_SEED), 500)
