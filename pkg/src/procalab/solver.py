"""Leapfrog evolution and fundamental solutions for (box + m^2) A = kappa.

On the flat ultrastatic lattice the wave operator acts componentwise, so
every component of any degree obeys the same scalar three-level
recurrence.  The stepper *is* the discrete equation, which makes the
quasi-inverse properties of the fundamental solutions sharp: residuals
are rounding noise, not discretization error.
"""

from dataclasses import dataclass

import numpy as np

from .lattice import LatticeSpacetime, CauchySlice
from .forms import DifferentialForm, combos, pairing
from .cauchy import (InitialDataPair, rho_zero, rho_n, rho_d, rho_delta,
                     data_to_levels, reduced_to_full, extract_data)


class SolverError(ValueError):
    pass


# ---------------------------------------------------------------------------
# componentwise machinery


def _laplace_h(arr, st: LatticeSpacetime):
    """Compact spatial Laplacian for the diagonal slice metric h."""
    out = np.zeros_like(arr)
    for ax in range(st.dims):
        sp = st.dx[ax]
        hinv = 1.0 / st.spatial_metric[ax]
        out += hinv * (np.roll(arr, -1, axis=ax) - 2.0 * arr + np.roll(arr, 1, axis=ax)) / (sp * sp)
    return out


def _march_component(st, m, source_levels, k_lo, level_lo, level_hi, forward=True, backward=True):
    """Fill a (T, *space) array from two adjacent levels k_lo, k_lo+1.

    The recurrence is A(n+1) = 2A(n) - A(n-1) + dt^2 (Lap_h A - m^2 A + S)(n),
    marched in both directions from the seed pair.
    """
    steps = st.steps
    dt = st.dt
    shape = (steps,) + tuple(st.config.extent)
    out = np.zeros(shape, dtype=np.complex128)
    out[k_lo] = level_lo
    out[k_lo + 1] = level_hi
    if forward:
        for n in range(k_lo + 1, steps - 1):
            acc = _laplace_h(out[n], st) - (m * m) * out[n]
            if source_levels is not None:
                acc = acc + source_levels[n]
            out[n + 1] = 2.0 * out[n] - out[n - 1] + dt * dt * acc
    if backward:
        for n in range(k_lo, 0, -1):
            acc = _laplace_h(out[n], st) - (m * m) * out[n]
            if source_levels is not None:
                acc = acc + source_levels[n]
            out[n - 1] = 2.0 * out[n] - out[n + 1] + dt * dt * acc
    return out


def _check_stability(st, m):
    bound = st.courant * st.courant + (m * m) * st.dt * st.dt / 4.0
    if st.cfl > 1.0 or bound > 1.0:
        raise SolverError(
            "unstable step: CFL %.3f, Courant bound %.3f (must be <= 1)" % (st.cfl, bound)
        )


def _support_window(F: DifferentialForm, tol=0.0):
    mags = np.max(np.abs(F.comps).reshape(F.comps.shape[0], F.comps.shape[1], -1), axis=(0, 2))
    nz = np.nonzero(mags > tol)[0]
    if len(nz) == 0:
        return None
    return int(nz[0]), int(nz[-1])


def _require_padding(F, pad=2, what="test form"):
    win = _support_window(F)
    if win is None:
        return None
    lo, hi = win
    steps = F.geometry.shape[0]
    if lo < pad or hi > steps - 1 - pad:
        raise SolverError("%s needs %d zero-padding levels at each window end" % (what, pad))
    return win


def interior_max_abs(F: DifferentialForm, skip=3):
    """Max magnitude away from the window-edge levels.

    Cyclic stencils corrupt the outermost levels of non-compact fields
    (propagator outputs); contract checks exclude them.
    """
    core = F.comps[:, skip:F.geometry.shape[0] - skip]
    return float(np.max(np.abs(core))) if core.size else 0.0


# ---------------------------------------------------------------------------
# evolution from Cauchy data


@dataclass
class EvolutionRun:
    """Solution of (box + m^2) A = kappa over the full window."""

    mass: float
    source: DifferentialForm
    data: InitialDataPair
    solution: DifferentialForm
    cfl: float

    def residual_interior(self):
        """Max residual of the discrete equation away from the window edges."""
        from .forms import dalembert_componentwise

        st_steps = self.solution.geometry.shape[0]
        box = dalembert_componentwise(self.solution)
        res = box.comps + (self.mass ** 2) * self.solution.comps
        if self.source is not None:
            res = res - self.source.comps
        core = res[:, 1:st_steps - 1]
        scale = 1.0 + self.solution.max_abs()
        return float(np.max(np.abs(core))) / scale


def evolve(st: LatticeSpacetime, m, data, source=None, direction="both") -> EvolutionRun:
    """Leapfrog solution of the wave equation from Cauchy data at a slice.

    ``data`` is an InitialDataPair or a reduced (a0, ad) tuple at a slice;
    the scalar data default to zero for the reduced form.  ``direction``
    limits the march to one side of the slice if desired.
    """
    if m < 0:
        raise SolverError("mass must be nonnegative")
    _check_stability(st, m)
    if isinstance(data, tuple):
        a0, ad, slc = data[0], data[1], data[2] if len(data) > 2 else None
        if slc is None:
            raise SolverError("reduced data must come with their slice")
        data = reduced_to_full(a0, ad, slc)
    slc = data.slice_
    k = slc.time_index
    if not (1 <= k <= st.steps - 2):
        raise SolverError("evolution slice must be interior to the window")
    if source is not None:
        _require_padding(source, 2, "source")
        if source.degree != 1:
            raise SolverError("wave sources are one-forms here")

    spatial_k, spatial_k1, time_km1, time_k = data_to_levels(data)
    fwd = direction in ("both", "forward")
    bwd = direction in ("both", "backward")

    sol = DifferentialForm(st.geometry, 1)
    src_comps = source.comps if source is not None else None
    # spatial components anchor at (k, k+1)
    for i, ci in enumerate(combos(st.geometry.n_axes, 1)):
        if ci == (0,):
            src = src_comps[i] if src_comps is not None else None
            sol.comps[i] = _march_component(st, m, src, k - 1, time_km1, time_k,
                                            forward=fwd, backward=bwd)
        else:
            src = src_comps[i] if src_comps is not None else None
            sol.comps[i] = _march_component(st, m, src, k, spatial_k[i - 1], spatial_k1[i - 1],
                                            forward=fwd, backward=bwd)
    return EvolutionRun(float(m), source, data, sol, st.cfl)


def evolve_component_field(st, m, degree, source, seed_level, seed_lo, seed_hi):
    """March every stored component of a degree-p form from a seed pair.

    Used for fundamental solutions, where all components carry the same
    scalar recurrence and the seed levels are simply zero outside the
    source support.
    """
    out = DifferentialForm(st.geometry, degree)
    for i in range(out.comps.shape[0]):
        src = source.comps[i] if source is not None else None
        out.comps[i] = _march_component(st, m, src, seed_level, seed_lo[i], seed_hi[i])
    return out


# ---------------------------------------------------------------------------
# fundamental solutions


def fundamental_E(st: LatticeSpacetime, m, F: DifferentialForm, sign) -> DifferentialForm:
    """Retarded (+) or advanced (-) fundamental solution applied to F.

    Built by zero-data evolution from outside the support of F, so the
    support of the result stays inside the causal future (past) of the
    support of F up to one site per step.
    """
    if m < 0:
        raise SolverError("mass must be nonnegative")
    _check_stability(st, m)
    if sign not in ("+", "-", 1, -1):
        raise SolverError("sign must be '+' (retarded) or '-' (advanced)")
    retarded = sign in ("+", 1)
    win = _require_padding(F, 2, "fundamental-solution argument")
    out = DifferentialForm(st.geometry, F.degree)
    if win is None:
        return out
    lo, hi = win
    steps = st.steps
    dt = st.dt
    if retarded:
        k = lo - 2  # zero seed pair strictly before the support
        for i in range(out.comps.shape[0]):
            arr = np.zeros((steps,) + tuple(st.config.extent), dtype=np.complex128)
            for n in range(k + 1, steps - 1):
                acc = _laplace_h(arr[n], st) - (m * m) * arr[n] + F.comps[i][n]
                arr[n + 1] = 2.0 * arr[n] - arr[n - 1] + dt * dt * acc
            out.comps[i] = arr
    else:
        k = hi + 1  # zero seed pair strictly after the support
        for i in range(out.comps.shape[0]):
            arr = np.zeros((steps,) + tuple(st.config.extent), dtype=np.complex128)
            for n in range(k, 0, -1):
                acc = _laplace_h(arr[n], st) - (m * m) * arr[n] + F.comps[i][n]
                arr[n - 1] = 2.0 * arr[n] - arr[n + 1] + dt * dt * acc
            out.comps[i] = arr
    return out


def causal_propagator_E(st: LatticeSpacetime, m, F: DifferentialForm) -> DifferentialForm:
    """Difference of the two fundamental solutions, a homogeneous solution.

    Oriented retarded-minus-advanced: with this orientation the smeared
    Cauchy-data formulas below agree with direct evolution, which the
    solution-formula tests check against.
    """
    return fundamental_E(st, m, F, "+") - fundamental_E(st, m, F, "-")


def support_leakage(F: DifferentialForm, EF: DifferentialForm, st, retarded=True, rtol=1e-12):
    """Sites per step by which EF leaks outside the discrete causal cone.

    Measures, per time level, the spatial distance of the support of EF
    beyond the cone grown from the support of F at one site per step.
    Periodic wraparound uses the torus metric.
    """
    mags_F = np.max(np.abs(F.comps), axis=0)
    mags_E = np.max(np.abs(EF.comps), axis=0)
    steps = st.steps
    thresh = rtol * (1.0 + float(mags_E.max()))
    # collapse to per-level spatial masks
    src_levels = [n for n in range(steps) if mags_F[n].max() > thresh]
    if not src_levels:
        return 0
    worst = 0
    shape = tuple(st.config.extent)
    src_sites = np.argwhere(mags_F.max(axis=0) > thresh)
    lo_t, hi_t = min(src_levels), max(src_levels)
    for n in range(steps):
        live = np.argwhere(mags_E[n] > thresh)
        if live.size == 0:
            continue
        allowed = (n - lo_t) if retarded else (hi_t - n)
        if allowed < 0:
            worst = max(worst, steps)  # support before the source: infinite leak
            continue
        # distance from each live site to the nearest source site, torus metric
        d = None
        for s in src_sites:
            diff = np.abs(live - s)
            for ax, ext in enumerate(shape):
                diff[:, ax] = np.minimum(diff[:, ax], ext - diff[:, ax])
            dist = diff.sum(axis=1)
            d = dist if d is None else np.minimum(d, dist)
        worst = max(worst, int(max(0, (d - allowed).max())))
    return worst


# ---------------------------------------------------------------------------
# Green's identity and the smeared solution formula


def boundary_pairings(data: InitialDataPair, F: DifferentialForm):
    """The four-slice-pairing combination of the wave-equation identity."""
    slc = data.slice_
    return (pairing(data.a0, rho_d(F, slc))
            + pairing(data.adelta, rho_n(F, slc))
            - pairing(data.an, rho_delta(F, slc))
            - pairing(data.ad, rho_zero(F, slc)))


def greens_identity_sides(A: DifferentialForm, F: DifferentialForm, slc: CauchySlice, m):
    """Both sides of the region-split identity, for each sign.

    Returns dict with lhs_plus, lhs_minus, rhs_plus, rhs_minus where the
    right sides carry the orientation signs of the region split.
    """
    from .forms import dalembert

    wave_F = dalembert(F) + (m * m) * F
    wave_A = dalembert(A) + (m * m) * A
    data = extract_data(A, slc)
    b = boundary_pairings(data, F)
    out = {}
    for which, tag in (("future", "plus"), ("past", "minus")):
        lhs = pairing(A, wave_F, (which, slc)) - pairing(F, wave_A, (which, slc))
        out["lhs_%s" % tag] = lhs
    out["rhs_plus"] = -b
    out["rhs_minus"] = b
    return out


def solve_from_data(st: LatticeSpacetime, m, data: InitialDataPair, source,
                    F: DifferentialForm):
    """Smeared value <A, F> of the wave solution, from data and source.

    Evaluates the fundamental-solution formula; it agrees with pairing
    the directly evolved solution against F to rounding.
    """
    _require_padding(F, 2)
    E_ret = fundamental_E(st, m, F, "+")
    E_adv = fundamental_E(st, m, F, "-")
    E_c = E_ret - E_adv
    slc = data.slice_
    total = 0.0 + 0.0j
    if source is not None:
        total += pairing(E_adv, source, ("future", slc))
        total += pairing(E_ret, source, ("past", slc))
    total += pairing(data.a0, rho_d(E_c, slc))
    total += pairing(data.adelta, rho_n(E_c, slc))
    total -= pairing(data.an, rho_delta(E_c, slc))
    total -= pairing(data.ad, rho_zero(E_c, slc))
    return total


def dispersion_omega(st: LatticeSpacetime, m, kvec):
    """Frequency of the discrete plane-wave mode with wave numbers kvec.

    Solves (2/dt^2)(1 - cos w dt) = sum_i (2/(h_i dx_i^2))(1 - cos k_i dx_i) + m^2.
    """
    sym = m * m
    for ax in range(st.dims):
        sym += (2.0 / (st.spatial_metric[ax] * st.dx[ax] ** 2)) * (1.0 - np.cos(kvec[ax] * st.dx[ax]))
    arg = st.dt * np.sqrt(sym) / 2.0
    if arg > 1.0:
        raise SolverError("mode outside the stable band")
    return (2.0 / st.dt) * np.arcsin(arg)
