import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from caplab.geometry import ConformalChart


@pytest.fixture(scope="session")
def euclidean():
    return ConformalChart.euclidean()


@pytest.fixture(scope="session")
def sphere3():
    return ConformalChart.sphere3_stereographic()


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)
