import os
import numpy as np
import pytest
from hypothesis import settings

from hyperlap.hypergraph import bundled

settings.register_profile("default", max_examples=40, deadline=None, derandomize=True)
settings.register_profile("thorough", max_examples=500, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(params=["louis4", "nested5", "twoedge4"])
def instance(request):
    return bundled(request.param)


@pytest.fixture
def louis4():
    return bundled("louis4")


@pytest.fixture
def nested5():
    return bundled("nested5")


@pytest.fixture
def twoedge4():
    return bundled("twoedge4")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
