import numpy as np
import pytest

from procalab.forms import DifferentialForm, ext_d, int_delta, dalembert, pairing, random_form
from procalab.cauchy import InitialDataPair, reduced_to_full, rho_d, rho_n
from procalab.lattice import SpacetimeConfig, build_spacetime, cauchy_slice
from procalab.solver import (fundamental_E, causal_propagator_E, interior_max_abs,
                             SolverError, support_leakage, _support_window)
from procalab.proca import (ConstraintError, proca_apply, wave_source, fundamental_G,
                            causal_propagator_G, evolve_proca, solve_proca_constrained,
                            solve_proca_unconstrained, kappa_map, theta_map,
                            symplectic_form, SymplecticPairing, constraint_residuals)
from tests.conftest import rng_for


def _conserved_source(st, rng, pad=8):
    return int_delta(random_form(st.geometry, 2, rng, time_pad=pad))


def _matched_ad(st, slc, j):
    """Slice datum whose divergence matches the source's normal component."""
    rnj = rho_n(j, slc)
    if st.dims == 1:
        vals = np.cumsum(st.spatial_metric[0] * rnj.comps[0] * st.dx[0], axis=0)
        ad = DifferentialForm(slc.geometry, 1)
        ad.comps[0] = vals
        return ad
    raise NotImplementedError


# ---------------------------------------------------------------------------
# the operator and its decomposition


def test_closed_forms_see_only_the_mass_term(st_small):
    rng = rng_for(401)
    chi = random_form(st_small.geometry, 0, rng, time_pad=3)
    A = ext_d(chi)
    m = 0.7
    out = proca_apply(A, m)
    assert (out - (m * m) * A).max_abs() <= 1e-12 * (1 + A.max_abs())


def test_operator_decomposition(st_small):
    rng = rng_for(402)
    A = random_form(st_small.geometry, 1, rng, time_pad=3)
    m = 0.9
    lhs = proca_apply(A, m)
    rhs = (dalembert(A) + m * m * A) - ext_d(int_delta(A))
    assert (lhs - rhs).max_abs() <= 1e-12 * (1 + A.max_abs())


# ---------------------------------------------------------------------------
# fundamental solutions


def test_G_quasi_inverse(st_small):
    rng = rng_for(403)
    F = random_form(st_small.geometry, 1, rng, time_pad=5)
    m = 0.7
    for sign in ("+", "-"):
        GF = fundamental_G(st_small, m, F, sign)
        resid = proca_apply(GF, m) - F
        assert interior_max_abs(resid, 3) <= 1e-8 * F.l2()
        # the other composition order annihilates equation images
        img = proca_apply(F, m)
        img.comps[:, :2] = 0.0
        img.comps[:, -2:] = 0.0
        back = fundamental_G(st_small, m, img, sign)
        assert interior_max_abs(back - F, 3) <= 1e-8 * F.l2()


def test_G_support(st_small):
    g = st_small.geometry
    F = DifferentialForm(g, 1)
    F.comps[1, 20:24, 12] = 1.0
    GF = fundamental_G(st_small, 0.5, F, "+")
    lo, _ = _support_window(F)
    assert np.max(np.abs(GF.comps[:, :lo])) == 0.0
    assert support_leakage(F, GF, st_small, retarded=True) <= 1


def test_G_rejects_massless(st_small):
    rng = rng_for(404)
    F = random_form(st_small.geometry, 1, rng, time_pad=5)
    with pytest.raises(SolverError):
        fundamental_G(st_small, 0.0, F, "+")


def test_G_kills_closed_forms(st_small):
    rng = rng_for(405)
    chi = random_form(st_small.geometry, 0, rng, time_pad=6)
    GF = causal_propagator_G(st_small, 0.5, ext_d(chi))
    assert interior_max_abs(GF, 3) <= 1e-10 * (1 + ext_d(chi).max_abs())


def test_G_uniqueness_via_decomposed_evolution(st_small):
    # two independent routes to the retarded vector propagator agree:
    # the wave-operator formula and direct evolution of the decomposed
    # system with zero past data
    rng = rng_for(406)
    F = random_form(st_small.geometry, 1, rng, time_pad=6)
    m = 0.8
    route1 = fundamental_G(st_small, m, F, "+")
    kappa = wave_source(F, m)
    kappa.comps[:, :2] = 0.0
    kappa.comps[:, -2:] = 0.0
    route2 = fundamental_E(st_small, m, kappa, "+")
    assert interior_max_abs(route1 - route2, 3) <= 1e-8 * (1 + route1.max_abs())


# ---------------------------------------------------------------------------
# constraint machinery


def test_constraint_propagation(st_long):
    rng = rng_for(407)
    slc = cauchy_slice(st_long, st_long.steps // 2)
    j = _conserved_source(st_long, rng)
    m = 0.6
    a0 = random_form(slc.geometry, 1, rng)
    ad = random_form(slc.geometry, 1, rng)
    data = reduced_to_full(a0, ad, slc, m=m, source=j, constrained=True)
    run = evolve_proca(st_long, m, j, data)
    scale = 1.0 + run.solution.max_abs()
    assert run.constraint_sup() <= 1e-8 * scale
    resid = proca_apply(run.solution, m) - j
    assert interior_max_abs(resid, 2) <= 1e-8 * scale


def test_violated_data_rejected_by_name(st_small, mid_slice):
    rng = rng_for(408)
    m = 0.5
    a0 = random_form(mid_slice.geometry, 1, rng)
    ad = random_form(mid_slice.geometry, 1, rng)
    good = reduced_to_full(a0, ad, mid_slice, m=m, source=None, constrained=True)
    bump = DifferentialForm(mid_slice.geometry, 0)
    bump.comps[0] = 1.0
    bad_delta = InitialDataPair(good.a0, good.ad, good.an, good.adelta + bump, mid_slice)
    with pytest.raises(ConstraintError, match="adelta"):
        solve_proca_constrained(st_small, m, None, bad_delta, None)
    bad_n = InitialDataPair(good.a0, good.ad, good.an + bump, good.adelta, mid_slice)
    with pytest.raises(ConstraintError, match="normal datum"):
        solve_proca_constrained(st_small, m, None, bad_n, None)


def test_violated_data_excite_the_monitor(st_long):
    rng = rng_for(409)
    slc = cauchy_slice(st_long, st_long.steps // 2)
    m = 0.6
    a0 = random_form(slc.geometry, 1, rng)
    ad = random_form(slc.geometry, 1, rng)
    good = reduced_to_full(a0, ad, slc, m=m, source=None, constrained=True)
    bump = DifferentialForm(slc.geometry, 0)
    bump.comps[0] = 1.0
    bad = InitialDataPair(good.a0, good.ad, good.an, good.adelta + bump, slc)
    run = evolve_proca(st_long, m, None, bad, check=False)
    assert run.constraint_sup() > 1e-3


# ---------------------------------------------------------------------------
# smeared solutions


def test_constrained_equals_unconstrained(st_long):
    rng = rng_for(410)
    slc = cauchy_slice(st_long, st_long.steps // 2)
    m = 0.7
    j = _conserved_source(st_long, rng)
    for trial in range(20):
        a0 = random_form(slc.geometry, 1, rng)
        ad = random_form(slc.geometry, 1, rng)
        F = random_form(st_long.geometry, 1, rng, time_pad=5)
        data = reduced_to_full(a0, ad, slc, m=m, source=j, constrained=True)
        vc = solve_proca_constrained(st_long, m, j, data, F)
        vu = solve_proca_unconstrained(st_long, m, j, (a0, ad, slc), F)
        assert abs(vc - vu) <= 1e-6 * (1 + abs(vc))


def test_closed_test_forms_do_not_contribute(st_small, mid_slice):
    rng = rng_for(411)
    m = 0.5
    chi = random_form(st_small.geometry, 0, rng, time_pad=6)
    F = ext_d(chi)
    a0 = random_form(mid_slice.geometry, 1, rng)
    ad = random_form(mid_slice.geometry, 1, rng)
    val = solve_proca_unconstrained(st_small, m, None, (a0, ad, mid_slice), F)
    assert abs(val) <= 1e-8 * (1 + a0.max_abs() + ad.max_abs()) * (1 + chi.l2())


def test_zero_data_reduces_to_source_term(st_small, mid_slice):
    rng = rng_for(412)
    m = 0.5
    j = _conserved_source(st_small, rng, pad=6)
    F = random_form(st_small.geometry, 1, rng, time_pad=6)
    zero = DifferentialForm(mid_slice.geometry, 1)
    val = solve_proca_unconstrained(st_small, m, j, (zero, zero, mid_slice), F)
    expected = (pairing(j, fundamental_G(st_small, m, F, "-"), ("future", mid_slice))
                + pairing(j, fundamental_G(st_small, m, F, "+"), ("past", mid_slice)))
    assert abs(val - expected) <= 1e-12 * (1 + abs(val))


def test_direct_evolution_agrees(st_long):
    rng = rng_for(413)
    slc = cauchy_slice(st_long, st_long.steps // 2)
    m = 0.8
    j = _conserved_source(st_long, rng)
    a0 = random_form(slc.geometry, 1, rng)
    ad = random_form(slc.geometry, 1, rng)
    F = random_form(st_long.geometry, 1, rng, time_pad=5)
    data = reduced_to_full(a0, ad, slc, m=m, source=j, constrained=True)
    run = evolve_proca(st_long, m, j, data)
    direct = pairing(run.solution, F)
    vu = solve_proca_unconstrained(st_long, m, j, (a0, ad, slc), F)
    assert abs(direct - vu) <= 1e-8 * (1 + abs(direct))


# ---------------------------------------------------------------------------
# the data correspondence


def test_kappa_kernel(st_small, mid_slice):
    rng = rng_for(414)
    m = 0.6
    Fp = random_form(st_small.geometry, 1, rng, time_pad=7)
    eom = proca_apply(Fp, m)
    eom.comps[:, :2] = 0.0
    eom.comps[:, -2:] = 0.0
    k0, kd = kappa_map(st_small, m, eom, mid_slice)
    scale = 1.0 + Fp.max_abs()
    assert k0.max_abs() <= 1e-9 * scale
    assert kd.max_abs() <= 1e-9 * scale


def test_kappa_kills_closed(st_small, mid_slice):
    rng = rng_for(415)
    chi = random_form(st_small.geometry, 0, rng, time_pad=7)
    k0, kd = kappa_map(st_small, 0.6, ext_d(chi), mid_slice)
    scale = 1.0 + chi.max_abs()
    assert k0.max_abs() <= 1e-8 * scale
    assert kd.max_abs() <= 1e-8 * scale


def test_kappa_linear(st_small, mid_slice):
    rng = rng_for(416)
    m = 0.6
    F1 = random_form(st_small.geometry, 1, rng, time_pad=6)
    F2 = random_form(st_small.geometry, 1, rng, time_pad=6)
    z = 1.5 - 0.5j
    la, lb = kappa_map(st_small, m, F1 + z * F2, mid_slice)
    ra0, rad = kappa_map(st_small, m, F1, mid_slice)
    sa0, sad = kappa_map(st_small, m, F2, mid_slice)
    assert (la - (ra0 + z * sa0)).max_abs() <= 1e-9 * (1 + la.max_abs())
    assert (lb - (rad + z * sad)).max_abs() <= 1e-9 * (1 + lb.max_abs())


def test_theta_kappa_round_trip(st_long):
    rng = rng_for(417)
    slc = cauchy_slice(st_long, st_long.steps // 2)
    m = 0.7
    phi = random_form(slc.geometry, 1, rng)
    pi = random_form(slc.geometry, 1, rng)
    F = theta_map(st_long, m, (phi, pi, slc), 8, st_long.steps - 8)
    k0, kd = kappa_map(st_long, m, F, slc)
    assert (k0 - phi).max_abs() <= 1e-2 * (1 + phi.max_abs())
    assert (kd - pi).max_abs() <= 1e-2 * (1 + pi.max_abs())


def test_theta_zero_data(st_long):
    slc = cauchy_slice(st_long, st_long.steps // 2)
    zero = DifferentialForm(slc.geometry, 1)
    F = theta_map(st_long, 0.7, (zero, zero, slc), 8, st_long.steps - 8)
    assert F.max_abs() == 0.0


def test_theta_support_inside_cutoff_band(st_long):
    rng = rng_for(418)
    slc = cauchy_slice(st_long, st_long.steps // 2)
    lo, hi = 10, st_long.steps - 10
    F = theta_map(st_long, 0.7, (random_form(slc.geometry, 1, rng),
                                 random_form(slc.geometry, 1, rng), slc), lo, hi)
    win = _support_window(F)
    assert win is not None
    assert win[0] >= lo - 1 and win[1] <= hi + 1


def test_theta_window_validation(st_small, mid_slice):
    rng = rng_for(419)
    phi = random_form(mid_slice.geometry, 1, rng)
    with pytest.raises(SolverError):
        theta_map(st_small, 0.7, (phi, phi, mid_slice), 1, st_small.steps - 1)


# ---------------------------------------------------------------------------
# the symplectic pairing


def test_symplectic_antisymmetry_exact(st_small, mid_slice):
    rng = rng_for(420)
    d1 = (random_form(mid_slice.geometry, 1, rng), random_form(mid_slice.geometry, 1, rng))
    d2 = (random_form(mid_slice.geometry, 1, rng), random_form(mid_slice.geometry, 1, rng))
    assert symplectic_form(d1, d1) == 0.0
    assert symplectic_form(d1, d2) + symplectic_form(d2, d1) == 0.0


def test_symplectic_equals_smeared_propagator(st_small, mid_slice):
    rng = rng_for(421)
    m = 0.7
    F = random_form(st_small.geometry, 1, rng, time_pad=6)
    Fp = random_form(st_small.geometry, 1, rng, time_pad=6)
    lhs = pairing(F, causal_propagator_G(st_small, m, Fp))
    rhs = symplectic_form(kappa_map(st_small, m, F, mid_slice),
                          kappa_map(st_small, m, Fp, mid_slice))
    assert abs(lhs - rhs) <= 1e-6 * (1 + abs(lhs))


def test_symplectic_full_rank_on_small_basis():
    st = build_spacetime(SpacetimeConfig(dims=1, extent=(8,), dx=(0.5,), steps=8, dt=0.25))
    slc = cauchy_slice(st, 4)
    pairing_obj = SymplecticPairing(slc)
    basis = []
    for which in range(2):
        for site in range(8):
            phi = DifferentialForm(slc.geometry, 1)
            pi = DifferentialForm(slc.geometry, 1)
            (phi if which == 0 else pi).comps[0, site] = 1.0
            basis.append((phi, pi))
    M = pairing_obj.matrix(basis)
    rank = np.linalg.matrix_rank(M, tol=1e-10)
    assert rank == 16


def test_rho_d_sees_through_the_vector_correction(st_small, mid_slice):
    rng = rng_for(422)
    m = 0.6
    F = random_form(st_small.geometry, 1, rng, time_pad=6)
    lhs = rho_d(causal_propagator_G(st_small, m, F), mid_slice)
    rhs = rho_d(causal_propagator_E(st_small, m, F), mid_slice)
    assert (lhs - rhs).max_abs() <= 1e-9 * (1 + rhs.max_abs())


def test_constraint_residual_report(st_small, mid_slice):
    rng = rng_for(423)
    m = 0.5
    a0 = random_form(mid_slice.geometry, 1, rng)
    ad = random_form(mid_slice.geometry, 1, rng)
    data = reduced_to_full(a0, ad, mid_slice, m=m, source=None, constrained=True)
    r_delta, r_n = constraint_residuals(data, m, None)
    assert r_delta <= 1e-12 and r_n <= 1e-12
