import pytest

from app.dictionaries.service import DictionaryConfig
from app.domain.service import BoxDomain, build_quadrature
from store import ArtifactStore


@pytest.fixture
def interval():
    return BoxDomain.cube(1)


@pytest.fixture
def square():
    return BoxDomain.cube(2)


@pytest.fixture
def interval_quadrature(interval):
    return build_quadrature(interval, 32)


@pytest.fixture
def square_quadrature(square):
    return build_quadrature(square, 24)


@pytest.fixture
def p1_interval(interval):
    return DictionaryConfig(family="P_k", domain=interval, k=1, c1=-2.0, c2=2.0, offsets=41)


@pytest.fixture
def p1_square(square):
    return DictionaryConfig(family="P_k", domain=square, k=1, c1=-2.0, c2=2.0, directions=16, offsets=21)


@pytest.fixture
def fs_interval(interval):
    return DictionaryConfig(family="F_s", domain=interval, s=0.0, xi_step=0.125, xi_radius=2.0)


@pytest.fixture
def store(tmp_path):
    return ArtifactStore(str(tmp_path / "run"))
