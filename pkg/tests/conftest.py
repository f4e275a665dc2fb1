import numpy as np
import pytest
from hypothesis import settings

from faberlab.curve import CurveSpec, resample

settings.register_profile("faberlab", max_examples=25, deadline=None)
settings.load_profile("faberlab")


@pytest.fixture(scope="session")
def circle():
    return resample(CurveSpec.circle(), 512)


@pytest.fixture(scope="session")
def ellipse():
    return resample(CurveSpec.ellipse(2.0, 1.0), 1024)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
