import os, sys

ROOT = os.path.abspath(os.path.join(os.path.dirname(__file__), ".."))
if ROOT not in sys.path:
    sys.path.insert(0, ROOT)

import hypothesis
import numpy as np
import pytest

hypothesis.settings.register_profile("fast", max_examples=10, deadline=None)
hypothesis.settings.load_profile("fast")

from models.experiment import build_fiducial_design, build_haar_design


@pytest.fixture(scope="session")
def haar_design():
    return build_haar_design(30, 30, np.random.default_rng(7))


@pytest.fixture(scope="session")
def fiducial_design():
    return build_fiducial_design(60, np.random.default_rng(11))
