import numpy as np
import pytest
from hypothesis import settings

# Numba JIT warm-up on first DP call makes per-example deadlines meaningless.
settings.register_profile("mfr", deadline=None)
settings.load_profile("mfr")


@pytest.fixture
def rng():
    return np.random.default_rng(0xC0FFEE)


@pytest.fixture
def fixture_catalog(tmp_path):
    from mfr.toy_models import make_fixture_catalog

    return make_fixture_catalog(tmp_path / "data")
