import numpy as np
import pytest

from procalab.lattice import SpacetimeConfig, build_spacetime, cauchy_slice


def rng_for(seed):
    return np.random.default_rng(np.random.Philox(key=seed))


@pytest.fixture
def st_small():
    """1+1D lattice used by most physics tests."""
    return build_spacetime(SpacetimeConfig(dims=1, extent=(24,), dx=(0.5,), steps=48, dt=0.25))


@pytest.fixture
def st_long():
    """Longer window for scans and cutoff constructions."""
    return build_spacetime(SpacetimeConfig(dims=1, extent=(32,), dx=(0.5,), steps=80, dt=0.25))


@pytest.fixture
def st_3d():
    """Small 3+1D lattice for dimension-generic checks."""
    return build_spacetime(SpacetimeConfig(dims=3, extent=(6, 6, 6), dx=(1.0, 1.0, 1.0),
                                           steps=16, dt=0.5))


@pytest.fixture
def mid_slice(st_small):
    return cauchy_slice(st_small, st_small.steps // 2)
