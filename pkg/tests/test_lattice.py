import numpy as np
import pytest

from procalab.lattice import (SpacetimeConfig, build_spacetime, cauchy_slice,
                              LatticeError)


def test_constructor_echo():
    st = build_spacetime(SpacetimeConfig(dims=1, extent=(64,), dx=(1.0,), steps=128, dt=0.5))
    assert st.dims == 1
    assert st.steps == 128
    assert st.cfl == pytest.approx(0.5)
    assert st.geometry.shape == (128, 64)
    assert st.geometry.metric_diag == (-1.0, 1.0)


def test_flat_volume_element_3d():
    st = build_spacetime(SpacetimeConfig(dims=3, extent=(4, 4, 4), dx=(0.3, 0.4, 0.5),
                                         steps=8, dt=0.1, metric_diag=(1.0, 1.0, 1.0)))
    assert st.volume_element() == pytest.approx(0.3 * 0.4 * 0.5 * 0.1)


def test_scaled_metric_volume_element():
    # sqrt|det h| = 2 for h = (4,), so the site volume doubles
    st = build_spacetime(SpacetimeConfig(dims=1, extent=(8,), dx=(0.5,), steps=8, dt=0.25,
                                         metric_diag=(4.0,)))
    hand_det = np.sqrt(abs(-1.0 * 4.0))
    assert hand_det == 2.0
    assert st.volume_element() == pytest.approx(2.0 * 0.5 * 0.25)


def test_rejects_bad_configs():
    with pytest.raises(LatticeError):
        build_spacetime(SpacetimeConfig(dims=2, extent=(8, 8), dx=(1.0, 1.0), steps=8, dt=0.1))
    with pytest.raises(LatticeError):
        build_spacetime(SpacetimeConfig(dims=1, extent=(3,), dx=(1.0,), steps=8, dt=0.1))
    with pytest.raises(LatticeError):
        build_spacetime(SpacetimeConfig(dims=1, extent=(8,), dx=(-1.0,), steps=8, dt=0.1))
    with pytest.raises(LatticeError):
        build_spacetime(SpacetimeConfig(dims=1, extent=(8,), dx=(1.0,), steps=8, dt=0.0))


def test_slice_bounds(st_small):
    assert cauchy_slice(st_small, 0).time_index == 0
    with pytest.raises(LatticeError):
        cauchy_slice(st_small, st_small.steps)
    with pytest.raises(LatticeError):
        cauchy_slice(st_small, -1)


def test_slices_share_metric(st_small):
    early = cauchy_slice(st_small, 0)
    mid = cauchy_slice(st_small, st_small.steps // 2)
    assert early.geometry == mid.geometry
    assert early.volume_element() == mid.volume_element()


def test_courant_record_3d():
    st = build_spacetime(SpacetimeConfig(dims=3, extent=(8, 8, 8), dx=(1.0, 1.0, 1.0),
                                         steps=8, dt=0.5))
    assert st.cfl == pytest.approx(0.5)
    assert st.courant == pytest.approx(0.5 * np.sqrt(3.0))
