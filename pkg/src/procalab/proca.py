"""The massive vector-field operator, its fundamental solutions and the
Cauchy-data machinery built on them.

The equation (delta d + m^2) A = j is solved through its decomposition
into the wave equation (box + m^2) A = j + (1/m^2) d delta j and the
divergence constraint delta A = (1/m^2) delta j.  On this lattice the
decomposition is exact: constrained data seed the constraint monitor to
zero at two adjacent levels and the recurrence keeps it zero.
"""

from dataclasses import dataclass

import numpy as np

from .lattice import LatticeSpacetime, CauchySlice
from .forms import DifferentialForm, pairing, ext_d, int_delta
from .cauchy import (InitialDataPair, rho_zero, rho_n, rho_d, rho_delta,
                     reduced_to_full, slice_divergence)
from .solver import (SolverError, fundamental_E, causal_propagator_E, evolve,
                     _require_padding)


class ConstraintError(ValueError):
    """Input Cauchy data violate a divergence constraint; names which."""


@dataclass
class ProcaRun:
    mass: float
    source: DifferentialForm
    data: InitialDataPair
    solution: DifferentialForm
    constraint_history: np.ndarray

    def constraint_sup(self):
        return float(np.max(self.constraint_history))


def proca_apply(A: DifferentialForm, m) -> DifferentialForm:
    """delta d A + m^2 A (m = 0 gives the source-free Maxwell operator)."""
    return int_delta(ext_d(A)) + (m * m) * A


def wave_source(j: DifferentialForm, m) -> DifferentialForm:
    """The decomposed wave-equation source j + (1/m^2) d delta j."""
    if j is None:
        return None
    return j + (1.0 / (m * m)) * ext_d(int_delta(j))


def fundamental_G(st: LatticeSpacetime, m, F: DifferentialForm, sign) -> DifferentialForm:
    """Fundamental solutions of the massive vector operator.

    G^+- = (d delta / m^2 + 1) E^+-; the 1/m^2 factor is the whole point
    of the zero-mass experiments, so m <= 0 is a hard error here.
    """
    if m <= 0:
        raise SolverError("fundamental_G needs m > 0; the massless physics lives in the scans")
    EF = fundamental_E(st, m, F, sign)
    return EF + (1.0 / (m * m)) * ext_d(int_delta(EF))


def causal_propagator_G(st: LatticeSpacetime, m, F: DifferentialForm) -> DifferentialForm:
    if m <= 0:
        raise SolverError("fundamental_G needs m > 0; the massless physics lives in the scans")
    EF = causal_propagator_E(st, m, F)
    return EF + (1.0 / (m * m)) * ext_d(int_delta(EF))


# ---------------------------------------------------------------------------
# constraint checking and evolution


def constraint_residuals(data: InitialDataPair, m, j):
    """Residuals of the two data constraints, scaled by the data size."""
    slc = data.slice_
    mm = m * m
    if j is None:
        r_delta = data.adelta
        r_n = mm * data.an - slice_divergence(data.ad)
    else:
        r_delta = data.adelta - (1.0 / mm) * rho_delta(j, slc)
        r_n = mm * data.an - slice_divergence(data.ad) - rho_n(j, slc)
    scale = 1.0 + max(data.a0.max_abs(), data.ad.max_abs(), data.an.max_abs(),
                      data.adelta.max_abs())
    return r_delta.max_abs() / scale, r_n.max_abs() / scale


def check_constraints(data, m, j, tol=1e-10):
    r_delta, r_n = constraint_residuals(data, m, j)
    if r_delta > tol:
        raise ConstraintError(
            "divergence datum violates adelta = rho_delta(j)/m^2 (residual %.3e)" % r_delta)
    if r_n > tol:
        raise ConstraintError(
            "normal datum violates m^2 an - div_slice(ad) = rho_n(j) (residual %.3e)" % r_n)


def evolve_proca(st, m, j, data: InitialDataPair, check=True, tol=1e-10) -> ProcaRun:
    """Evolve the decomposed system and monitor the divergence constraint.

    The monitor is never projected; a violation in the input data shows
    up as a propagating wave in the history, which is what the negative
    controls look for.
    """
    if m <= 0:
        raise SolverError("the massive evolution needs m > 0")
    if check:
        check_constraints(data, m, j, tol)
    kappa = wave_source(j, m)
    run = evolve(st, m, data, source=kappa)
    A = run.solution
    dA = int_delta(A)
    target = (1.0 / (m * m)) * int_delta(j) if j is not None else None
    res = dA.comps if target is None else dA.comps - target.comps
    scale = 1.0 + A.max_abs()
    per_level = np.max(np.abs(res).reshape(res.shape[0], res.shape[1], -1), axis=(0, 2)) / scale
    history = per_level[1:-1]  # stencil wraps at the window edges
    return ProcaRun(float(m), j, data, A, history)


# ---------------------------------------------------------------------------
# smeared solutions


def solve_proca_constrained(st, m, j, data: InitialDataPair, F, tol=1e-10):
    """<A, F> for the constrained formulation; checks the data first."""
    check_constraints(data, m, j, tol)
    _require_padding(F, 2)
    from .solver import solve_from_data

    return solve_from_data(st, m, data, wave_source(j, m), F)


def solve_proca_unconstrained(st, m, j, reduced, F):
    """<A, F> from the reduced data (a0, ad) and the vector propagators."""
    a0, ad, slc = reduced
    _require_padding(F, 2)
    G_ret = fundamental_G(st, m, F, "+")
    G_adv = fundamental_G(st, m, F, "-")
    G_c = G_ret - G_adv
    total = 0.0 + 0.0j
    if j is not None:
        total += pairing(j, G_adv, ("future", slc))
        total += pairing(j, G_ret, ("past", slc))
    total += pairing(a0, rho_d(G_c, slc))
    total -= pairing(ad, rho_zero(G_c, slc))
    return total


# ---------------------------------------------------------------------------
# initial-data correspondence


def kappa_map(st, m, F, slc: CauchySlice):
    """Reduced Cauchy data of the propagated test form."""
    GF = causal_propagator_G(st, m, F)
    return (rho_zero(GF, slc), rho_d(GF, slc))


def smoothstep5(x):
    """Quintic smoothstep: 0 below 0, 1 above 1, C^2 in between."""
    x = np.clip(x, 0.0, 1.0)
    return x * x * x * (10.0 + x * (-15.0 + 6.0 * x))


def theta_map(st, m, reduced, lo_index, hi_index):
    """Test form whose propagated data reproduce the given reduced pair.

    Evolves the source-free constrained solution A from (a0, ad), cuts it
    off in time with a quintic ramp between the levels lo_index and
    hi_index, and returns (delta d + m^2)(chi A).  kappa_map inverts this
    up to rounding.
    """
    a0, ad, slc = reduced
    k = slc.time_index
    if not (3 <= lo_index < k < hi_index <= st.steps - 4):
        raise SolverError("cutoff window does not fit: need 3 <= lo < slice < hi <= steps-4")
    data = reduced_to_full(a0, ad, slc, m=m, source=None, constrained=True)
    run = evolve_proca(st, m, None, data, check=False)
    A = run.solution
    t = np.arange(st.steps, dtype=float)
    chi = smoothstep5((t - lo_index) / float(hi_index - lo_index))
    chiA = DifferentialForm(st.geometry, 1,
                            A.comps * chi.reshape((1, -1) + (1,) * st.dims))
    F = proca_apply(chiA, m)
    # outside the ramp the integrand is the field equation, which vanishes;
    # the bounded window corrupts those levels through the cyclic stencils,
    # so enforce the compact support the construction guarantees
    F.comps[:, :lo_index - 1] = 0.0
    F.comps[:, hi_index + 2:] = 0.0
    return F


def symplectic_form(data1, data2):
    """Antisymmetric pairing of two reduced data sets on one slice.

    <pi, phi'> - <phi, pi'> with the slice pairing; equals the smeared
    causal propagator <F, G F'> when both data come from kappa_map.
    Written in explicitly antisymmetrized form: the slice pairing is
    symmetric, so the value is unchanged, but machine multiplication is
    not bitwise commutative and the antisymmetry should be exact.
    """
    phi1, pi1 = data1[0], data1[1]
    phi2, pi2 = data2[0], data2[1]
    if phi1.geometry != phi2.geometry:
        raise SolverError("symplectic form needs data on one slice")
    forward = pairing(pi1, phi2) - pairing(phi1, pi2)
    backward = pairing(pi2, phi1) - pairing(phi2, pi1)
    return 0.5 * (forward - backward)


@dataclass(frozen=True)
class SymplecticPairing:
    """Evaluator of the data symplectic form bound to one slice."""

    slc: CauchySlice

    def __call__(self, data1, data2):
        for d in (data1, data2):
            if d[0].geometry != self.slc.geometry:
                raise SolverError("data do not live on the bound slice")
        return symplectic_form(data1, data2)

    def matrix(self, basis):
        n = len(basis)
        M = np.zeros((n, n), dtype=np.complex128)
        for i in range(n):
            for k in range(n):
                M[i, k] = self(basis[i], basis[k])
        return M
