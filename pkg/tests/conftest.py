import numpy as np
import pytest
from hypothesis import settings

from hjhomog import HoleShape, PerforatedDomain, make_model

settings.register_profile("lab", deadline=None, max_examples=50)
settings.load_profile("lab")


@pytest.fixture(scope="session")
def disc():
    return HoleShape("disc", 0.25)


@pytest.fixture(scope="session")
def holed(disc):
    return PerforatedDomain(hole=disc)


@pytest.fixture(scope="session")
def free_dom():
    return PerforatedDomain(hole=None)


@pytest.fixture(scope="session")
def free_model():
    return make_model("free", lip_g=1.0)
