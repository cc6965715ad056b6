"""Initial-data mapping operators and Cauchy-data containers.

The four maps are the pullback, the forward normal, the forward normal
derivative and the pullback of the divergence.  A slice anchored at time
level k holds the spatial components at levels (k, k+1) and the time
component at levels (k-1, k); together with the extraction stencils this
makes the data <-> field-levels correspondence an exact bijection on the
lattice, which is what keeps the smeared solution formulas exact.
"""

from dataclasses import dataclass

import numpy as np

from .lattice import CauchySlice
from .forms import (DifferentialForm, combos, combo_index, hodge, int_delta,
                    _ext_d_flavored, _diff)


class CauchyDataError(ValueError):
    pass


# ---------------------------------------------------------------------------
# restriction helpers


def _restrict_spatial(A: DifferentialForm, slc: CauchySlice) -> DifferentialForm:
    """Spatial-component restriction of a spacetime form at the slice level."""
    g = A.geometry
    n = g.n_axes
    p = A.degree
    sg = slc.geometry
    if p > sg.n_axes:
        return DifferentialForm(sg, sg.n_axes)
    out = DifferentialForm(sg, p)
    idx_s = combo_index(sg.n_axes, p)
    for i, ci in enumerate(combos(n, p)):
        if 0 in ci:
            continue
        key = tuple(mu - 1 for mu in ci)
        out.comps[idx_s[key]] = A.comps[i][slc.time_index]
    return out


def _onesided_dt(comps, k, dt):
    """Second-order one-sided time derivative at a window edge level k."""
    steps = comps.shape[1]
    if k == steps - 1:
        return (3.0 * comps[:, k] - 4.0 * comps[:, k - 1] + comps[:, k - 2]) / (2.0 * dt)
    if k == 0:
        return (-3.0 * comps[:, 0] + 4.0 * comps[:, 1] - comps[:, 2]) / (2.0 * dt)
    raise CauchyDataError("one-sided stencil requested away from the window edge")


# ---------------------------------------------------------------------------
# the rho operators


def rho_zero(A: DifferentialForm, slc: CauchySlice) -> DifferentialForm:
    """Pullback: restriction of the purely spatial components to the slice."""
    return _restrict_spatial(A, slc)


def rho_n(A: DifferentialForm, slc: CauchySlice) -> DifferentialForm:
    """Forward normal, the composite -*_slice pullback *.

    Evaluates, for one-forms, to the covariant time component at the
    slice level; zero-forms map to zero.
    """
    starred = hodge(A)
    restricted = _restrict_spatial(starred, slc)
    sg = slc.geometry
    if restricted.degree > sg.n_axes or A.degree == 0:
        return DifferentialForm(sg, 0)
    from .forms import hodge as slice_hodge

    return -1.0 * slice_hodge(restricted)


def rho_n_direct(A: DifferentialForm, slc: CauchySlice) -> DifferentialForm:
    """Shortcut route: contract the time slot and restrict.

    Must agree with the Hodge-composite rho_n; kept as the independent
    cross-check of the composite's sign.
    """
    g = A.geometry
    n = g.n_axes
    p = A.degree
    sg = slc.geometry
    if p == 0:
        return DifferentialForm(sg, 0)
    out = DifferentialForm(sg, p - 1)
    idx_a = combo_index(n, p)
    idx_s = combo_index(sg.n_axes, p - 1)
    for cj in combos(n, p - 1):
        if 0 in cj:
            continue
        key = (0,) + cj
        out.comps[idx_s[tuple(mu - 1 for mu in cj)]] = A.comps[idx_a[key]][slc.time_index]
    return out


def rho_d(A: DifferentialForm, slc: CauchySlice) -> DifferentialForm:
    """Forward normal derivative, rho_n of the exterior derivative.

    At the upper window edge the time-derivative part switches to a
    second-order one-sided stencil; everywhere else this is exactly the
    operator composite.
    """
    g = A.geometry
    k = slc.time_index
    if A.degree == g.n_axes:
        # the exterior derivative of a top form vanishes
        return DifferentialForm(slc.geometry, slc.geometry.n_axes)
    dA = _ext_d_flavored(A, "forward")
    if k == g.shape[0] - 1:
        # the forward time difference wrapped; swap in a one-sided stencil
        n = g.n_axes
        idx_a = combo_index(n, A.degree)
        idx_d = combo_index(n, A.degree + 1)
        for cj in combos(n, A.degree):
            if 0 in cj:
                continue
            key = (0,) + cj
            wrapped = _diff(A.comps[idx_a[cj]], 0, g.spacings[0], "forward")[k]
            fixed = _onesided_dt(A.comps[idx_a[cj]][None, :], k, g.spacings[0])[0]
            dA.comps[idx_d[key]][k] += fixed - wrapped
    return rho_n(dA, slc)


def rho_delta(A: DifferentialForm, slc: CauchySlice) -> DifferentialForm:
    """Pullback of the divergence; zero-forms map to zero."""
    g = A.geometry
    if A.degree == 0:
        return DifferentialForm(slc.geometry, 0)
    k = slc.time_index
    if k > 0:
        return rho_zero(int_delta(A), slc)
    # edge: backward time stencil would wrap; use one-sided second order
    n = g.n_axes
    p = A.degree
    sg = slc.geometry
    out = DifferentialForm(sg, p - 1)
    idx_a = combo_index(n, p)
    idx_s = combo_index(sg.n_axes, p - 1)
    for cj in combos(n, p - 1):
        if 0 in cj:
            continue
        acc = np.zeros(tuple(sg.shape), dtype=np.complex128)
        for mu in range(n):
            if mu in cj:
                continue
            key = tuple(sorted((mu,) + cj))
            pos = key.index(mu)
            sign = (-1) ** pos
            comp = A.comps[idx_a[key]]
            if mu == 0:
                dcomp = _onesided_dt(comp[None, :], 0, g.spacings[0])[0]
            else:
                dcomp = _diff(comp, mu, g.spacings[mu], "backward")[0]
            acc -= sign * g.inverse_metric(mu) * dcomp
        out.comps[idx_s[tuple(mu - 1 for mu in cj)]] = acc
    return out


# ---------------------------------------------------------------------------
# data containers


@dataclass(frozen=True)
class InitialDataPair:
    """The four Cauchy data of a one-form at a slice.

    a0 and ad are spatial one-forms on the slice, an and adelta spatial
    zero-forms.  The reduced pair (a0, ad) is the datum used by the
    unconstrained solution formula.
    """

    a0: DifferentialForm
    ad: DifferentialForm
    an: DifferentialForm
    adelta: DifferentialForm
    slice_: CauchySlice

    def __post_init__(self):
        sg = self.slice_.geometry
        for f, deg in ((self.a0, 1), (self.ad, 1), (self.an, 0), (self.adelta, 0)):
            if f.geometry != sg:
                raise CauchyDataError("all data must live on the slice grid")
            if f.degree != deg:
                raise CauchyDataError("data degree mismatch")

    @property
    def reduced(self):
        return (self.a0, self.ad)

    def serialize(self):
        from .forms import to_bytes

        blocks = []
        for label, f in (("a0", self.a0), ("ad", self.ad), ("an", self.an), ("adelta", self.adelta)):
            blob = to_bytes(f)
            blocks.append(("%s %d\n" % (label, len(blob))).encode() + blob)
        return b"".join(blocks)

    @staticmethod
    def deserialize(payload, slc):
        from .forms import from_bytes

        fields = {}
        pos = 0
        while pos < len(payload):
            nl = payload.index(b"\n", pos)
            label, size = payload[pos:nl].decode().split()
            start = nl + 1
            fields[label] = from_bytes(slc.geometry, payload[start:start + int(size)])
            pos = start + int(size)
        return InitialDataPair(fields["a0"], fields["ad"], fields["an"],
                               fields["adelta"], slc)


def extract_data(A: DifferentialForm, slc: CauchySlice) -> InitialDataPair:
    """All four Cauchy data of a spacetime one-form."""
    return InitialDataPair(rho_zero(A, slc), rho_d(A, slc), rho_n(A, slc),
                           rho_delta(A, slc), slc)


def slice_divergence(f: DifferentialForm) -> DifferentialForm:
    """Interior derivative on the slice grid (Riemannian sign conventions)."""
    return int_delta(f)


def data_to_levels(data: InitialDataPair):
    """Field levels pinned by the data: exact inverse of extract_data.

    Returns (spatial levels at (k, k+1), time levels at (k-1, k)) as
    component arrays for a spacetime one-form.
    """
    slc = data.slice_
    st = slc.parent
    g = st.geometry
    sg = slc.geometry
    dt = g.spacings[0]
    dsp = sg.n_axes

    a0 = data.a0.comps
    ad = data.ad.comps
    an = data.an.comps[0]
    adelta = data.adelta.comps[0]

    grad_an = np.stack([_diff(an, ax, sg.spacings[ax], "forward") for ax in range(dsp)])
    div_a0 = np.zeros_like(adelta)
    for ax in range(dsp):
        div_a0 += sg.inverse_metric(ax) * _diff(a0[ax], ax, sg.spacings[ax], "backward")

    spatial_k = a0.copy()
    spatial_k1 = a0 + dt * (ad + grad_an)
    time_k = an.copy()
    time_km1 = an - dt * (adelta + div_a0)
    return spatial_k, spatial_k1, time_km1, time_k


def reduced_to_full(a0, ad, slc, m=None, source=None, constrained=False):
    """Build a full InitialDataPair from a reduced one.

    With constrained=True the scalar data are reconstructed from the
    divergence constraints for mass m and source one-form ``source``
    (zero source allowed); otherwise they are set to zero.
    """
    sg = slc.geometry
    if not constrained:
        return InitialDataPair(a0, ad, DifferentialForm(sg, 0), DifferentialForm(sg, 0), slc)
    if m is None or m <= 0:
        raise CauchyDataError("constrained reconstruction needs a positive mass")
    if source is None:
        rn_j = DifferentialForm(sg, 0)
        rd_j = DifferentialForm(sg, 0)
    else:
        rn_j = rho_n(source, slc)
        rd_j = rho_delta(source, slc)
    an = (1.0 / (m * m)) * (rn_j + slice_divergence(ad))
    adelta = (1.0 / (m * m)) * rd_j
    return InitialDataPair(a0, ad, an, adelta, slc)
