import numpy as np
import pytest
from hypothesis import settings

from stream_verify.assembly import gram_matrices
from stream_verify.mesh import build_initial, refine_red
from stream_verify.morley import MorleySpace
from stream_verify.pwpoly import PwPoly

settings.register_profile('numerics', deadline=None, max_examples=40)
settings.load_profile('numerics')


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run full benchmark histories")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(scope='session')
def square0():
    return build_initial('unit_square')


@pytest.fixture(scope='session')
def square1(square0):
    return refine_red(square0)


@pytest.fixture(scope='session')
def square2(square1):
    return refine_red(square1)


@pytest.fixture(scope='session')
def lshape0():
    return build_initial('l_shape')


@pytest.fixture(scope='session')
def lshape1(lshape0):
    return refine_red(lshape0)


@pytest.fixture(scope='session')
def grams1(square1):
    return gram_matrices(square1)


@pytest.fixture(scope='session')
def grams2(square2):
    return gram_matrices(square2)


@pytest.fixture(scope='session')
def lgrams1(lshape1):
    return gram_matrices(lshape1)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_morley(mesh_or_space, rng, scale=1.0):
    space = mesh_or_space if isinstance(mesh_or_space, MorleySpace) else MorleySpace(mesh_or_space)
    return space.function(scale * rng.standard_normal(space.dim))


def linear_pwpoly(mesh, a, b, c):
    """a + b x + c y as a degree-1 PwPoly."""
    B = mesh.jacobians
    origin = mesh.vertices[mesh.triangles[:, 0]]
    coef = np.zeros((mesh.n_triangles, 3))
    coef[:, 0] = a + b * origin[:, 0] + c * origin[:, 1]
    coef[:, 1] = b * B[:, 0, 0] + c * B[:, 1, 0]
    coef[:, 2] = b * B[:, 0, 1] + c * B[:, 1, 1]
    return PwPoly.from_pieces(mesh, coef, 1)
