import numpy as np
import pytest

from procalab.forms import DifferentialForm, ext_d, int_delta, dalembert, pairing, random_form
from procalab.cauchy import InitialDataPair, extract_data, reduced_to_full
from procalab.lattice import SpacetimeConfig, build_spacetime, cauchy_slice
from procalab.solver import (SolverError, evolve, fundamental_E,
                             causal_propagator_E, solve_from_data, dispersion_omega,
                             greens_identity_sides, support_leakage, interior_max_abs,
                             _support_window)
from tests.conftest import rng_for


def _wave_interior_residual(st, m, run):
    return run.residual_interior()


# ---------------------------------------------------------------------------
# evolution basics


def test_zero_data_zero_source_is_zero(st_small, mid_slice):
    zero = reduced_to_full(DifferentialForm(mid_slice.geometry, 1),
                           DifferentialForm(mid_slice.geometry, 1), mid_slice)
    run = evolve(st_small, 0.5, zero)
    assert run.solution.max_abs() == 0.0


def test_interior_residual_is_rounding(st_small, mid_slice):
    rng = rng_for(301)
    data = reduced_to_full(random_form(mid_slice.geometry, 1, rng),
                           random_form(mid_slice.geometry, 1, rng), mid_slice)
    src = random_form(st_small.geometry, 1, rng, time_pad=4)
    run = evolve(st_small, 0.8, data, source=src)
    assert run.residual_interior() <= 1e-10


def test_solution_linear_in_data_and_source(st_small, mid_slice):
    rng = rng_for(302)
    sg = mid_slice.geometry
    d1 = reduced_to_full(random_form(sg, 1, rng), random_form(sg, 1, rng), mid_slice)
    d2 = reduced_to_full(random_form(sg, 1, rng), random_form(sg, 1, rng), mid_slice)
    s1 = random_form(st_small.geometry, 1, rng, time_pad=4)
    s2 = random_form(st_small.geometry, 1, rng, time_pad=4)
    z = 0.3 - 1.2j
    combo = InitialDataPair(d1.a0 + z * d2.a0, d1.ad + z * d2.ad, d1.an + z * d2.an,
                            d1.adelta + z * d2.adelta, mid_slice)
    lhs = evolve(st_small, 0.5, combo, source=s1 + z * s2).solution
    rhs1 = evolve(st_small, 0.5, d1, source=s1).solution
    rhs2 = evolve(st_small, 0.5, d2, source=s2).solution
    diff = lhs - (rhs1 + z * rhs2)
    assert diff.max_abs() <= 1e-10 * (1 + lhs.max_abs())


def test_cfl_violation_rejected():
    st = build_spacetime(SpacetimeConfig(dims=1, extent=(16,), dx=(0.25,), steps=16, dt=0.5))
    slc = cauchy_slice(st, 8)
    zero = reduced_to_full(DifferentialForm(slc.geometry, 1),
                           DifferentialForm(slc.geometry, 1), slc)
    with pytest.raises(SolverError):
        evolve(st, 0.0, zero)


def test_source_padding_enforced(st_small, mid_slice):
    rng = rng_for(303)
    src = random_form(st_small.geometry, 1, rng)  # fills the whole window
    zero = reduced_to_full(DifferentialForm(mid_slice.geometry, 1),
                           DifferentialForm(mid_slice.geometry, 1), mid_slice)
    with pytest.raises(SolverError):
        evolve(st_small, 0.5, zero, source=src)


# ---------------------------------------------------------------------------
# dispersion: oracle solves the two-term recurrence independently


def test_uniform_mode_closed_form():
    # static uniform data, m = 1: the component recurrence
    #   a(n+1) = (2 - dt^2 m^2) a(n) - a(n-1)
    # with equal seed levels has the exact solution
    #   a(n) = cos(w0 (n - k - 1/2) dt) / cos(w0 dt / 2),
    # where w0 = dispersion at k = 0; freeze that as the oracle
    st = build_spacetime(SpacetimeConfig(dims=1, extent=(16,), dx=(0.5,), steps=40, dt=0.25))
    slc = cauchy_slice(st, 20)
    m = 1.0
    c = 0.7
    a0 = DifferentialForm(slc.geometry, 1)
    a0.comps[0] = c
    ad = DifferentialForm(slc.geometry, 1)
    run = evolve(st, m, reduced_to_full(a0, ad, slc))
    w0 = dispersion_omega(st, m, (0.0,))
    n = np.arange(st.steps)
    expected = c * np.cos(w0 * (n - 20 - 0.5) * st.dt) / np.cos(w0 * st.dt / 2.0)
    got = run.solution.comps[1][:, 3].real
    assert np.allclose(got, expected, atol=1e-10)


def test_traveling_mode_phase_advance():
    # the exact discrete traveling mode: data pin the field at the slice
    # level and the interface difference; the evolved phase advance per
    # step then matches the independently solved dispersion frequency
    st = build_spacetime(SpacetimeConfig(dims=1, extent=(32,), dx=(0.5,), steps=40, dt=0.25))
    kk = 20
    slc = cauchy_slice(st, kk)
    k = 2 * np.pi * 4 / (32 * 0.5)
    w = dispersion_omega(st, 0.0, (k,))
    x = np.arange(32) * 0.5
    level_kk = np.exp(1j * (k * x - w * kk * st.dt))
    a0 = DifferentialForm(slc.geometry, 1)
    a0.comps[0] = level_kk
    ad = DifferentialForm(slc.geometry, 1)
    ad.comps[0] = level_kk * (np.exp(-1j * w * st.dt) - 1.0) / st.dt
    run = evolve(st, 0.0, reduced_to_full(a0, ad, slc))
    sol = run.solution.comps[1]
    n = np.arange(st.steps)
    exact = np.exp(1j * (k * x[None, :] - w * n[:, None] * st.dt))
    assert np.max(np.abs(sol - exact)) <= 1e-10
    phases = sol[5:-5, 7] / sol[4:-6, 7]
    assert np.allclose(phases, np.exp(-1j * w * st.dt), atol=1e-9)


def test_convergence_order_against_continuum():
    # halving (dt, dx) together cuts the error against the continuum mode
    # by 4 (+- 15 percent), across three refinement levels; the field
    # datum sits at the slice level, the velocity datum at the interface
    errors = []
    for level in range(3):
        n = 16 * 2 ** level
        steps = 32 * 2 ** level
        dx = 8.0 / n
        dt = dx / 2.0
        st = build_spacetime(SpacetimeConfig(dims=1, extent=(n,), dx=(dx,), steps=steps, dt=dt))
        slc = cauchy_slice(st, steps // 2)
        k = 2 * np.pi / 8.0
        w_cont = k  # massless continuum dispersion
        x = np.arange(n) * dx
        t_anchor = slc.time_index * dt
        a0 = DifferentialForm(slc.geometry, 1)
        a0.comps[0] = np.exp(1j * (k * x - w_cont * t_anchor))
        ad = DifferentialForm(slc.geometry, 1)
        ad.comps[0] = -1j * w_cont * np.exp(1j * (k * x - w_cont * (t_anchor + dt / 2.0)))
        run = evolve(st, 0.0, reduced_to_full(a0, ad, slc))
        tgrid = np.arange(steps) * dt
        expected = np.exp(1j * (k * x[None, :] - w_cont * tgrid[:, None]))
        errors.append(np.max(np.abs(run.solution.comps[1] - expected)))
    r1 = errors[0] / errors[1]
    r2 = errors[1] / errors[2]
    assert 4.0 * 0.85 <= r1 <= 4.0 * 1.15
    assert 4.0 * 0.85 <= r2 <= 4.0 * 1.15


# ---------------------------------------------------------------------------
# fundamental solutions


def test_retarded_quasi_inverse(st_small):
    rng = rng_for(304)
    F = random_form(st_small.geometry, 1, rng, time_pad=5)
    for sign in ("+", "-"):
        EF = fundamental_E(st_small, 0.7, F, sign)
        resid = dalembert(EF) + 0.49 * EF - F
        assert interior_max_abs(resid, 2) <= 1e-9 * F.l2()


def test_retarded_support(st_small):
    rng = rng_for(305)
    F = random_form(st_small.geometry, 1, rng, time_pad=8)
    lo, hi = _support_window(F)
    Ep = fundamental_E(st_small, 0.5, F, "+")
    Em = fundamental_E(st_small, 0.5, F, "-")
    assert np.max(np.abs(Ep.comps[:, :lo])) == 0.0
    assert np.max(np.abs(Em.comps[:, hi + 1:])) == 0.0


def test_cone_leakage(st_small):
    g = st_small.geometry
    F = DifferentialForm(g, 1)
    F.comps[1, 20:24, 12] = 1.0  # point-like in space
    Ep = fundamental_E(st_small, 0.3, F, "+")
    assert support_leakage(F, Ep, st_small, retarded=True) <= 1

    Em = fundamental_E(st_small, 0.3, F, "-")
    assert support_leakage(F, Em, st_small, retarded=False) <= 1


def test_commutation_with_d_and_delta(st_small):
    rng = rng_for(306)
    G0 = random_form(st_small.geometry, 0, rng, time_pad=5)
    m = 0.6
    for sign in ("+", "-"):
        lhs = fundamental_E(st_small, m, ext_d(G0), sign)
        rhs = ext_d(fundamental_E(st_small, m, G0, sign))
        assert interior_max_abs(lhs - rhs, 2) <= 1e-9 * (1 + G0.l2())
    A = random_form(st_small.geometry, 1, rng, time_pad=5)
    lhs = causal_propagator_E(st_small, m, int_delta(A))
    rhs = int_delta(causal_propagator_E(st_small, m, A))
    assert interior_max_abs(lhs - rhs, 2) <= 1e-9 * (1 + A.l2())


def test_causal_propagator_is_homogeneous(st_small):
    rng = rng_for(307)
    F = random_form(st_small.geometry, 1, rng, time_pad=5)
    m = 0.4
    EF = causal_propagator_E(st_small, m, F)
    resid = dalembert(EF) + m * m * EF
    assert interior_max_abs(resid, 2) <= 1e-9 * F.l2()


def test_massless_propagator_annihilates_wave_images(st_small):
    rng = rng_for(308)
    G = random_form(st_small.geometry, 1, rng, time_pad=6)
    F = dalembert(G)
    F.comps[:, :2] = 0.0
    F.comps[:, -2:] = 0.0
    E0F = causal_propagator_E(st_small, 0.0, F)
    assert interior_max_abs(E0F, 3) <= 1e-9 * (1 + G.l2())


def test_translation_equivariance(st_small):
    rng = rng_for(309)
    F = random_form(st_small.geometry, 1, rng, time_pad=5)
    shift = 7
    F_shift = DifferentialForm(st_small.geometry, 1, np.roll(F.comps, shift, axis=2))
    lhs = fundamental_E(st_small, 0.5, F_shift, "+")
    rhs = DifferentialForm(st_small.geometry, 1,
                           np.roll(fundamental_E(st_small, 0.5, F, "+").comps, shift, axis=2))
    assert (lhs - rhs).max_abs() == 0.0


# ---------------------------------------------------------------------------
# the smeared formula and the two-region identity


def test_smeared_formula_source_only(st_small, mid_slice):
    rng = rng_for(310)
    kappa = random_form(st_small.geometry, 1, rng, time_pad=5)
    F = random_form(st_small.geometry, 1, rng, time_pad=5)
    zero = reduced_to_full(DifferentialForm(mid_slice.geometry, 1),
                           DifferentialForm(mid_slice.geometry, 1), mid_slice)
    direct = pairing(evolve(st_small, 0.5, zero, source=kappa).solution, F)
    smeared = solve_from_data(st_small, 0.5, zero, kappa, F)
    assert abs(direct - smeared) <= 1e-6 * abs(direct)


def test_smeared_formula_full_data(st_small, mid_slice):
    rng = rng_for(311)
    sg = mid_slice.geometry
    data = InitialDataPair(random_form(sg, 1, rng), random_form(sg, 1, rng),
                           random_form(sg, 0, rng), random_form(sg, 0, rng), mid_slice)
    kappa = random_form(st_small.geometry, 1, rng, time_pad=5)
    F = random_form(st_small.geometry, 1, rng, time_pad=5)
    run = evolve(st_small, 0.9, data, source=kappa)
    direct = pairing(run.solution, F)
    smeared = solve_from_data(st_small, 0.9, data, kappa, F)
    assert abs(direct - smeared) <= 1e-10 * (1 + abs(direct))


def test_self_consistency_of_extracted_data(st_small, mid_slice):
    # feeding the data of an evolved solution back reproduces <A, F>
    rng = rng_for(312)
    seed_form = random_form(st_small.geometry, 1, rng, time_pad=4)
    run = evolve(st_small, 0.5, extract_data(seed_form, mid_slice))
    data2 = extract_data(run.solution, mid_slice)
    F = random_form(st_small.geometry, 1, rng, time_pad=5)
    assert abs(pairing(run.solution, F) - solve_from_data(st_small, 0.5, data2, None, F)) \
        <= 1e-10 * (1 + abs(pairing(run.solution, F)))


def test_greens_identity_both_signs(st_small):
    rng = rng_for(313)
    slc = cauchy_slice(st_small, 23)
    A = random_form(st_small.geometry, 1, rng, time_pad=4)
    F = random_form(st_small.geometry, 1, rng, time_pad=4)
    sides = greens_identity_sides(A, F, slc, m=0.8)
    for tag in ("plus", "minus"):
        lhs, rhs = sides["lhs_%s" % tag], sides["rhs_%s" % tag]
        assert abs(lhs - rhs) <= 1e-8 * (1 + abs(lhs))


# ---------------------------------------------------------------------------
# direction-limited marches and higher dimensions


def test_one_directional_evolution(st_small, mid_slice):
    from tests.conftest import rng_for as _rng
    rng = _rng(314)
    data = reduced_to_full(random_form(mid_slice.geometry, 1, rng),
                           random_form(mid_slice.geometry, 1, rng), mid_slice)
    fwd = evolve(st_small, 0.5, data, direction="forward").solution
    bwd = evolve(st_small, 0.5, data, direction="backward").solution
    both = evolve(st_small, 0.5, data, direction="both").solution
    k = mid_slice.time_index
    assert np.array_equal(fwd.comps[:, k + 1:], both.comps[:, k + 1:])
    assert np.array_equal(bwd.comps[:, :k - 1], both.comps[:, :k - 1])
    # untouched side of a one-directional march stays zero
    assert np.max(np.abs(fwd.comps[:, :k - 2])) == 0.0
    assert np.max(np.abs(bwd.comps[:, k + 2:])) == 0.0


def test_three_plus_one_smeared_formula(st_3d):
    from tests.conftest import rng_for as _rng
    rng = _rng(315)
    slc = cauchy_slice(st_3d, st_3d.steps // 2)
    sg = slc.geometry
    data = InitialDataPair(random_form(sg, 1, rng), random_form(sg, 1, rng),
                           random_form(sg, 0, rng), random_form(sg, 0, rng), slc)
    kappa = random_form(st_3d.geometry, 1, rng, time_pad=3)
    F = random_form(st_3d.geometry, 1, rng, time_pad=3)
    run = evolve(st_3d, 0.4, data, source=kappa)
    assert run.residual_interior() <= 1e-10
    direct = pairing(run.solution, F)
    smeared = solve_from_data(st_3d, 0.4, data, kappa, F)
    assert abs(direct - smeared) <= 1e-9 * (1 + abs(direct))
