import numpy as np
import pytest

from driftwind.mollify import BumpKernel, build_cached_pair, build_tile_field
from driftwind.potential import build_tessellation

DELTA = 1.0 / 16.0


@pytest.fixture(scope="session")
def tess():
    return build_tessellation(DELTA)


@pytest.fixture(scope="session")
def kernel():
    return BumpKernel(DELTA)


@pytest.fixture(scope="session")
def vr_quad(tess, kernel):
    return build_tile_field(tess, kernel, mode="quadrature", which="r", quad_tol=1e-8)


@pytest.fixture(scope="session")
def vu_quad(tess, kernel):
    return build_tile_field(tess, kernel, mode="quadrature", which="u", quad_tol=1e-8)


@pytest.fixture(scope="session")
def cached_pair(tess, kernel):
    """(V_r, V_u) cached at resolution 512; built once per session (~10 s)."""
    return build_cached_pair(tess, kernel, resolution=512)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240808)
