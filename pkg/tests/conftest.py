import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from graphfields import build_laplacian
from graphfields.networks import parallel_route, path3, triangle, unit_edge


@pytest.fixture(scope="session")
def g_unit():
    return unit_edge()


@pytest.fixture(scope="session")
def g_path3():
    return path3()


@pytest.fixture(scope="session")
def g_triangle():
    return triangle()


@pytest.fixture(scope="session")
def g_parallel():
    return parallel_route()


@pytest.fixture(scope="session")
def sys_unit(g_unit):
    return build_laplacian(g_unit)


@pytest.fixture(scope="session")
def sys_triangle(g_triangle):
    return build_laplacian(g_triangle)
