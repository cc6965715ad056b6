"""Zero-mass-limit experiments, classical and quantum.

A scan drives the same probes and mass-independent data through the
solution formulas over a decreasing mass sequence and classifies each
probe: co-closed probes converge, closed probes drop out of the
observables, generic probes diverge like 1/m^2.  The quantum check runs
on the initial-data representation (scalar coefficient plus propagated
data), which the field-algebra construction reduces the question to.
"""

from dataclasses import dataclass, field

import numpy as np

from .lattice import LatticeSpacetime
from .forms import DifferentialForm, pairing, ext_d, int_delta, random_form, combos
from .cauchy import rho_zero, rho_n, rho_d
from .solver import fundamental_E, causal_propagator_E, interior_max_abs
from .proca import (fundamental_G, causal_propagator_G, kappa_map, symplectic_form,
                    solve_proca_unconstrained)
from .cauchy import slice_divergence


class ScanError(ValueError):
    pass


# ---------------------------------------------------------------------------
# probes


def make_probe(kind, st: LatticeSpacetime, rng, time_pad=6):
    """Build a labeled test one-form of the requested divergence class.

    co-closed probes are interior derivatives of compact two-forms (their
    divergence vanishes identically), closed probes are gradients of
    compact scalars, generic probes are bumps with a certified
    non-vanishing divergence fraction.
    """
    g = st.geometry
    if kind == "co-closed":
        H = random_form(g, 2, rng, time_pad=time_pad)
        F = int_delta(H)
    elif kind == "closed":
        chi = random_form(g, 0, rng, time_pad=time_pad)
        F = ext_d(chi)
    elif kind == "generic":
        while True:
            F = random_form(g, 1, rng, time_pad=time_pad)
            if int_delta(F).l2() / F.l2() >= 0.1:
                break
    else:
        raise ScanError("unknown probe kind %r" % (kind,))
    return F


def probe_divergence_fraction(F):
    return int_delta(F).l2() / F.l2()


# ---------------------------------------------------------------------------
# the convergence heuristic


def is_cauchy_convergent(values, scale=1.0, n_required=5, shrink=1.5, last_tol=1e-4):
    """Sequence verdict used throughout the scans.

    True when the last n_required successive differences each shrink by
    at least the given factor and the final difference is below
    last_tol * scale.  Differences at the rounding floor (1e-8 * scale,
    the double-precision noise after the 1/m^2 amplification at the
    smallest scan masses) are accepted without a shrink requirement.
    """
    diffs = [abs(values[i + 1] - values[i]) for i in range(len(values) - 1)]
    if len(diffs) < n_required + 1:
        return False
    tail = diffs[-(n_required + 1):]
    floor = 1e-8 * scale
    for a, b in zip(tail, tail[1:]):
        if b > floor and a < shrink * b:
            return False
    return tail[-1] <= last_tol * scale


def fit_divergence_slope(masses, norms, n_points=6):
    """Least-squares slope of log norm against log (1/m), small-mass tail."""
    ms = np.asarray(masses[-n_points:], dtype=float)
    ns = np.asarray(norms[-n_points:], dtype=float)
    x = np.log(1.0 / ms)
    y = np.log(ns)
    slope, _ = np.polyfit(x, y, 1)
    return float(slope)


def geometric_masses(m0=1.0, count=12):
    return [m0 * 2.0 ** (-k) for k in range(count)]


MIN_MASS = 2.0 ** -12  # keep 1/m^2 comfortably inside double precision


# ---------------------------------------------------------------------------
# classical scan


@dataclass
class MassScan:
    masses: list
    probes: dict                      # name -> (form, kind)
    records: dict = field(default_factory=dict)   # name -> list of per-mass dicts
    verdicts: dict = field(default_factory=dict)  # name -> {"converges": bool, "slope": float}


def classical_scan(st, j, data, probes, masses):
    """Smear the massive solutions with each probe across the mass sweep.

    data = (a0, ad, slc) is held fixed across masses.  Each record keeps
    the observable, the propagated-form norm, the obstruction-term norm
    and the propagated-data norm.
    """
    if any(m <= 0 for m in masses):
        raise ScanError("masses must be positive")
    if any(m < MIN_MASS for m in masses):
        raise ScanError("masses below 2^-12 leave double precision comfort")
    a0, ad, slc = data
    scan = MassScan(list(masses), {})
    for name, (F, kind) in probes.items():
        scan.probes[name] = (F, kind)
        dF = probe_divergence_fraction(F)
        if kind == "co-closed" and dF > 1e-10:
            raise ScanError("probe %s is not numerically co-closed (%.2e)" % (name, dF))
        recs = []
        for m in masses:
            GF = causal_propagator_G(st, m, F)
            obstruction = (1.0 / (m * m)) * causal_propagator_E(st, m, ext_d(int_delta(F)))
            k0, kd = rho_zero(GF, slc), rho_d(GF, slc)
            value = solve_proca_unconstrained(st, m, j, (a0, ad, slc), F)
            recs.append({
                "mass": m,
                "value": value,
                "G_norm": interior_max_abs(GF),
                "obstruction_norm": interior_max_abs(obstruction),
                "data_norm": float(np.sqrt(k0.l2() ** 2 + kd.l2() ** 2)),
            })
        scan.records[name] = recs
        values = [r["value"] for r in recs]
        scale = 1.0 + max(abs(v) for v in values)
        floor = noise_floor(masses, (a0, ad), F, st)
        trivially_zero = max(abs(v) for v in values) <= floor
        verdict = {
            "kind": kind,
            "converges": bool(is_cauchy_convergent(values, scale) or trivially_zero),
            "trivially_zero": bool(trivially_zero),
            "slope": fit_divergence_slope(masses, [r["G_norm"] for r in recs]),
            "max_abs_value": max(abs(v) for v in values),
            "noise_floor": floor,
        }
        scan.verdicts[name] = verdict
    return scan


def noise_floor(masses, data, F, st):
    """Rounding floor of a smeared observable after the 1/m^2 amplification.

    An observable that is analytically zero is computed through a
    catastrophic cancellation scaled by 1/m^2; sequences below this floor
    are classified as identically zero (hence convergent).
    """
    a0, ad = data[0], data[1]
    data_l2 = np.sqrt(a0.l2() ** 2 + ad.l2() ** 2)
    amp = 1.0 / min(masses) ** 2
    return 1e-12 * amp * (1.0 + data_l2) * (1.0 + F.l2()) * st.volume_element()


# ---------------------------------------------------------------------------
# limit dynamics


def limit_dynamics_check(st, j, data, F, masses, enforce_preconditions=True):
    """Residual of the Maxwell dynamics along the mass sweep.

    Returns per-mass |<A_m, delta d F> - <j, F>| plus the two remainder
    pieces whose cancellation (under conserved current and the matched
    normal datum) is what makes the residual vanish in the limit.
    """
    a0, ad, slc = data
    if enforce_preconditions:
        scale_j = 1.0 + (interior_max_abs(j) if j is not None else 0.0)
        dj = int_delta(j).max_abs() if j is not None else 0.0
        if dj > 1e-10 * scale_j:
            raise ScanError("current is not conserved: ||delta j|| = %.3e" % dj)
        rn_j = rho_n(j, slc) if j is not None else None
        mismatch = (rn_j + slice_divergence(ad)) if rn_j is not None else slice_divergence(ad)
        scale_d = 1.0 + ad.max_abs()
        if mismatch.max_abs() > 1e-10 * scale_d:
            raise ScanError("normal-datum constraint rho_n j = -div_slice(ad) violated "
                            "(residual %.3e)" % mismatch.max_abs())
    probe = int_delta(ext_d(F))
    target = pairing(j, F) if j is not None else 0.0
    rows = []
    for m in masses:
        val = solve_proca_unconstrained(st, m, j, (a0, ad, slc), probe)
        EddF = causal_propagator_E(st, m, ext_d(int_delta(F)))
        piece_source = 0.0 + 0.0j
        if j is not None:
            piece_source += pairing(j, fundamental_E(st, m, ext_d(int_delta(F)), "-"), ("future", slc))
            piece_source += pairing(j, fundamental_E(st, m, ext_d(int_delta(F)), "+"), ("past", slc))
        piece_data = pairing(ad, rho_zero(EddF, slc))
        rows.append({
            "mass": m,
            "residual": abs(val - target),
            "remainder_source": piece_source,
            "remainder_data": piece_data,
        })
    return rows


# ---------------------------------------------------------------------------
# quantum limit


def quantum_limit_check(st, j, F, masses, slc, lorenz_pi=None):
    """Cauchy convergence of the initial-data representation of the field.

    The degree-0 coefficient is the source pairing (optionally with the
    normal-datum correction for the Lorenz-compatible convention, giving
    the classical solution the slice datum pi); the degree-1 datum is the
    propagated-data pair.  Both must converge for the limit to exist.
    Sequences at the 1/m^2-amplified rounding floor count as identically
    zero, exactly as in the classical scan.
    """
    c0s = []
    datas = []
    for m in masses:
        c0 = 0.0 + 0.0j
        if j is not None:
            c0 += pairing(j, fundamental_G(st, m, F, "-"), ("future", slc))
            c0 += pairing(j, fundamental_G(st, m, F, "+"), ("past", slc))
        if lorenz_pi is not None:
            c0 -= pairing(lorenz_pi, rho_zero(causal_propagator_G(st, m, F), slc))
        c0s.append(c0)
        datas.append(kappa_map(st, m, F, slc))
    data_norms = [float(np.sqrt(d[0].l2() ** 2 + d[1].l2() ** 2)) for d in datas]
    data_diffs = [float(np.sqrt((datas[i + 1][0] - datas[i][0]).l2() ** 2
                                + (datas[i + 1][1] - datas[i][1]).l2() ** 2))
                  for i in range(len(datas) - 1)]
    amp = 1.0 / min(masses) ** 2
    floor_c = 1e-12 * amp * (1.0 + (interior_max_abs(j) if j is not None else 0.0)) \
        * (1.0 + F.l2()) * st.volume_element()
    floor_d = 1e-12 * amp * (1.0 + F.l2())
    scale_c = 1.0 + max(abs(c) for c in c0s)
    scale_d = 1.0 + max(data_norms)
    c0_conv = bool(is_cauchy_convergent(c0s, scale_c)
                   or max(abs(c) for c in c0s) <= floor_c)
    # reuse the scalar criterion on the cumulative-difference sequence
    partial = np.concatenate([[0.0], np.cumsum(data_diffs)])
    d_conv = bool(is_cauchy_convergent(list(partial), scale_d)
                  or max(data_norms) <= floor_d)
    return {
        "coefficient": c0s,
        "data_norms": data_norms,
        "data_diffs": data_diffs,
        "coefficient_converges": c0_conv,
        "data_converges": d_conv,
        "converges": bool(c0_conv and d_conv),
    }


def commutator_limit(st, F, Fprime, masses, slc):
    """Propagator pairing against its massless value, per mass.

    For co-closed arguments the massive symplectic pairing approaches the
    massless one; the rows record the difference magnitude.
    """
    E0 = causal_propagator_E(st, 0.0, Fprime)
    target = pairing(F, E0)
    rows = []
    for m in masses:
        gm = symplectic_form(kappa_map(st, m, F, slc), kappa_map(st, m, Fprime, slc))
        rows.append({"mass": m, "value": gm, "difference": abs(gm - target)})
    return target, rows


def propagator_continuity_fit(st, F, masses):
    """Fitted Lipschitz constant of m -> E_m F in the squared mass.

    Verifies the continuity assumption numerically: reports max ratio
    ||E_m F - E_m' F|| / |m^2 - m'^2| over adjacent scan masses.
    """
    fields = [causal_propagator_E(st, m, F) for m in masses]
    worst = 0.0
    for i in range(len(masses) - 1):
        num = interior_max_abs(fields[i + 1] - fields[i])
        den = abs(masses[i] ** 2 - masses[i + 1] ** 2)
        worst = max(worst, num / den)
    return worst


# ---------------------------------------------------------------------------
# dense small-instance oracle for the closed + co-closed split


def dense_operator_matrix(st, op, degree):
    """Dense matrix of a form operator on a small lattice, basis by basis."""
    g = st.geometry
    ncomb = len(combos(g.n_axes, degree))
    nsites = int(np.prod(g.shape))
    dim = ncomb * nsites
    probe = DifferentialForm(g, degree)
    out_probe = op(probe)
    rows = out_probe.comps.size
    M = np.zeros((rows, dim), dtype=np.complex128)
    flat = probe.comps.reshape(-1)
    for i in range(dim):
        flat[:] = 0.0
        flat[i] = 1.0
        M[:, i] = op(probe).comps.reshape(-1)
    return M


def _null_space(M, rcond=1e-10):
    u, s, vh = np.linalg.svd(M, full_matrices=True)
    tol = rcond * (s[0] if s.size else 1.0)
    rank = int(np.sum(s > tol))
    return vh[rank:].conj().T


def hodge_split_distance(st, F, interior_pad=2):
    """Distance of F from ker(d) + ker(delta) among padded lattice forms.

    Brute-force oracle used on small instances only: builds the dense
    derivative matrices restricted to time-padded one-forms, spans the
    two kernels, and measures the relative least-squares misfit of F.
    """
    g = st.geometry
    steps = g.shape[0]
    mask = np.zeros(g.shape, dtype=bool)
    mask[interior_pad:steps - interior_pad] = True
    ncomb = len(combos(g.n_axes, 1))
    site_mask = np.broadcast_to(mask, (ncomb,) + tuple(g.shape)).reshape(-1)
    cols = np.nonzero(site_mask)[0]

    D = dense_operator_matrix(st, ext_d, 1)[:, cols]
    DEL = dense_operator_matrix(st, int_delta, 1)[:, cols]
    Kd = _null_space(D)
    Kdel = _null_space(DEL)
    span = np.hstack([Kd, Kdel]) if Kd.size and Kdel.size else (Kd if Kdel.size == 0 else Kdel)
    f = F.comps.reshape(-1)[cols]
    if span.size == 0:
        return 1.0
    coef, *_ = np.linalg.lstsq(span, f, rcond=None)
    resid = f - span @ coef
    return float(np.linalg.norm(resid) / max(np.linalg.norm(f), 1e-300))
