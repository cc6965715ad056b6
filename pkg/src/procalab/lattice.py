"""Periodic-space lattices with an ultrastatic product metric.

The spacetime grid is a bounded time window times a spatial torus, with
metric g = -dt^2 + h where h is a constant diagonal spatial metric.  The
future unit normal of every constant-t slice is the time direction itself,
so the slicing is geodesic and curl-free by construction.  Constant-t
slices are periodic Riemannian grids carrying h.
"""

from dataclasses import dataclass

import numpy as np


class LatticeError(ValueError):
    pass


@dataclass(frozen=True)
class Geometry:
    """Uniform rectangular grid with a constant diagonal metric.

    Axis 0 of a Lorentzian geometry is the time axis (metric entry -1);
    a Riemannian geometry (a slice) has only spatial axes.  All spatial
    axes are periodic.  The time axis is a bounded window: derivative
    stencils wrap arrays cyclically, so fields meant to be compactly
    supported in time must keep at least two zero levels at each end.
    """

    shape: tuple
    spacings: tuple
    metric_diag: tuple

    def __post_init__(self):
        if len(self.shape) != len(self.spacings) or len(self.shape) != len(self.metric_diag):
            raise LatticeError("shape, spacings and metric_diag must have equal length")

    @property
    def n_axes(self):
        return len(self.shape)

    @property
    def s_negatives(self):
        """Number of negative metric eigenvalues (1 spacetime, 0 slice)."""
        return sum(1 for g in self.metric_diag if g < 0)

    @property
    def sqrt_abs_det(self):
        return float(np.sqrt(abs(float(np.prod(self.metric_diag)))))

    @property
    def cell_volume(self):
        return float(np.prod(self.spacings))

    def inverse_metric(self, axis):
        return 1.0 / self.metric_diag[axis]


@dataclass(frozen=True)
class SpacetimeConfig:
    """Grid and metric description accepted by build_spacetime."""

    dims: int
    extent: tuple
    dx: tuple
    steps: int
    dt: float
    metric_diag: tuple = None

    def normalized(self):
        extent = tuple(int(e) for e in (self.extent if hasattr(self.extent, "__len__") else (self.extent,)))
        dx = tuple(float(d) for d in (self.dx if hasattr(self.dx, "__len__") else (self.dx,)))
        md = self.metric_diag
        if md is None:
            md = tuple(1.0 for _ in range(self.dims))
        md = tuple(float(m) for m in (md if hasattr(md, "__len__") else (md,)))
        if len(extent) == 1 and self.dims > 1:
            extent = extent * self.dims
        if len(dx) == 1 and self.dims > 1:
            dx = dx * self.dims
        if len(md) == 1 and self.dims > 1:
            md = md * self.dims
        return SpacetimeConfig(self.dims, extent, dx, int(self.steps), float(self.dt), md)


@dataclass(frozen=True)
class LatticeSpacetime:
    """Validated spacetime lattice: geometry plus solver bookkeeping.

    Immutable after construction; safe to share between threads.
    """

    config: SpacetimeConfig
    geometry: Geometry
    slice_geometry: Geometry
    cfl: float
    courant: float

    @property
    def dims(self):
        return self.config.dims

    @property
    def steps(self):
        return self.config.steps

    @property
    def dt(self):
        return self.config.dt

    @property
    def dx(self):
        return self.config.dx

    @property
    def spatial_metric(self):
        return self.config.metric_diag

    @property
    def n_axes(self):
        return self.geometry.n_axes

    def volume_element(self):
        """Spacetime volume per site, sqrt|det g| times the cell volume."""
        return self.geometry.sqrt_abs_det * self.geometry.cell_volume


@dataclass(frozen=True)
class CauchySlice:
    """A constant-t slice of a spacetime lattice.

    The slice is anchored at integer time level ``time_index``; data
    extracted there describe the field and its time derivative across the
    adjacent levels.  The spatial metric is the parent's h at every index
    (the metric is ultrastatic).
    """

    parent: LatticeSpacetime
    time_index: int

    def __post_init__(self):
        if not (0 <= self.time_index < self.parent.steps):
            raise LatticeError(
                "slice index %d outside window [0, %d)" % (self.time_index, self.parent.steps)
            )

    @property
    def geometry(self):
        return self.parent.slice_geometry

    def volume_element(self):
        return self.geometry.sqrt_abs_det * self.geometry.cell_volume


def build_spacetime(config: SpacetimeConfig) -> LatticeSpacetime:
    """Validate a grid description and assemble the lattice.

    Records the CFL ratio dt / min_i(dx_i * sqrt(h_i)) and the full
    Courant number dt * sqrt(sum_i 1/(dx_i^2 h_i)); the latter must stay
    <= 1 for the explicit stepper to be stable.
    """
    cfg = config.normalized()
    if cfg.dims not in (1, 3):
        raise LatticeError("spatial_dims must be 1 or 3, got %r" % (cfg.dims,))
    if any(e < 4 for e in cfg.extent) or cfg.steps < 4:
        raise LatticeError("all extents must be >= 4 (including time steps)")
    if any(d <= 0 for d in cfg.dx) or cfg.dt <= 0:
        raise LatticeError("all spacings must be positive")
    if any(m <= 0 for m in cfg.metric_diag):
        raise LatticeError("spatial metric entries must be positive")

    geom = Geometry(
        shape=(cfg.steps,) + cfg.extent,
        spacings=(cfg.dt,) + cfg.dx,
        metric_diag=(-1.0,) + cfg.metric_diag,
    )
    slice_geom = Geometry(shape=cfg.extent, spacings=cfg.dx, metric_diag=cfg.metric_diag)
    cfl = cfg.dt / min(d * np.sqrt(m) for d, m in zip(cfg.dx, cfg.metric_diag))
    courant = cfg.dt * np.sqrt(sum(1.0 / (d * d * m) for d, m in zip(cfg.dx, cfg.metric_diag)))
    return LatticeSpacetime(cfg, geom, slice_geom, float(cfl), float(courant))


def cauchy_slice(st: LatticeSpacetime, t: int) -> CauchySlice:
    return CauchySlice(st, int(t))
