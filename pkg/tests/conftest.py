import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from evomomentum import SimplexPoint, make_cyclic_matrix  # noqa: E402


@pytest.fixture
def rps():
    return make_cyclic_matrix(1, -1)


@pytest.fixture
def hawk_dove():
    return make_cyclic_matrix(1, 1)


@pytest.fixture
def cyc21():
    return make_cyclic_matrix(2, 1)


@pytest.fixture
def cyc2m1():
    return make_cyclic_matrix(2, -1)


@pytest.fixture
def center():
    return SimplexPoint.barycenter(3)
