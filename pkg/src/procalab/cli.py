"""Batch experiment runner.

Subcommands: identities, solve, proca, mass-scan, algebra, weyl, all.
Configs are flat structured text ([section] headers, key = value lines);
every random draw goes through one counter-based generator keyed by the
seed, and result rows are assembled in a fixed order, so repeated runs
are byte-identical at any thread count.
"""

import argparse
import concurrent.futures
import json
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .lattice import SpacetimeConfig, build_spacetime, cauchy_slice, LatticeError
from .forms import (DifferentialForm, random_form, ext_d, int_delta, hodge,
                    hodge_inverse_sign, pairing, to_bytes, combos)
from .cauchy import rho_n, reduced_to_full
from .solver import evolve, interior_max_abs, SolverError
from . import proca as proca_mod
from . import masslimit
from . import ccr
from . import weyl as weyl_mod


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# config parsing

_SPACETIME_KEYS = {"dims", "extent", "dx", "steps", "dt", "metric_diag"}
_EXPERIMENT_KEYS = {"kind", "seed", "mass", "masses", "probes", "constrained", "threads",
                    "mode", "source", "data", "test_form"}


def parse_config(text):
    """Sections of key = value pairs; unknown keys are rejected by line."""
    sections = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            sections.setdefault(current, {})
            continue
        if "=" not in line:
            raise ConfigError("line %d: expected key = value, got %r" % (lineno, raw))
        if current is None:
            raise ConfigError("line %d: key outside any [section]" % lineno)
        key, value = [part.strip() for part in line.split("=", 1)]
        known = {"spacetime": _SPACETIME_KEYS, "experiment": _EXPERIMENT_KEYS}.get(current)
        if known is not None and key not in known:
            raise ConfigError("line %d: unknown key [%s].%s" % (lineno, current, key))
        sections[current][key] = value
    return sections


def _floats(text):
    return tuple(float(x) for x in text.replace(",", " ").split())


def _ints(text):
    return tuple(int(x) for x in text.replace(",", " ").split())


def spacetime_from_config(sections):
    spc = sections.get("spacetime")
    if spc is None:
        raise ConfigError("missing [spacetime] section")
    for key in ("dims", "extent", "dx", "steps", "dt"):
        if key not in spc:
            raise ConfigError("missing [spacetime].%s" % key)
    cfg = SpacetimeConfig(
        dims=int(spc["dims"]),
        extent=_ints(spc["extent"]),
        dx=_floats(spc["dx"]),
        steps=int(spc["steps"]),
        dt=float(spc["dt"]),
        metric_diag=_floats(spc["metric_diag"]) if "metric_diag" in spc else None,
    )
    return build_spacetime(cfg)


def make_rng(seed, stream=0):
    return np.random.default_rng(np.random.Philox(key=(int(seed), int(stream))))


def _fmt(x):
    if isinstance(x, complex):
        return "%r%+rj" % (x.real, x.imag)
    if isinstance(x, float):
        return repr(x)
    return str(x)


# ---------------------------------------------------------------------------
# experiments: each returns (rows, verdicts, extras)


def experiment_identities(st, seed, outdir=None):
    rng = make_rng(seed, 1)
    g = st.geometry
    rows = []
    checks = {}
    worst = {"dd": 0.0, "deldel": 0.0, "hodge": 0.0, "adjoint": 0.0}
    for p in range(0, g.n_axes + 1):
        A = random_form(g, p, rng, time_pad=3)
        scale = 1.0 + A.max_abs()
        if p + 2 <= g.n_axes:
            worst["dd"] = max(worst["dd"], ext_d(ext_d(A)).max_abs() / scale)
        if p >= 2:
            worst["deldel"] = max(worst["deldel"], int_delta(int_delta(A)).max_abs() / scale)
        sgn = hodge_inverse_sign(g, p)
        worst["hodge"] = max(worst["hodge"], (hodge(hodge(A)) - sgn * A).max_abs() / scale)
        if p + 1 <= g.n_axes:
            B = random_form(g, p + 1, rng, time_pad=3)
            lhs = pairing(ext_d(A), B)
            rhs = pairing(A, int_delta(B))
            worst["adjoint"] = max(worst["adjoint"], abs(lhs - rhs) / (1.0 + abs(lhs)))
        rows.append(("identities", "degree_%d" % p, scale - 1.0))
    checks["dd_residual"] = worst["dd"]
    checks["deldel_residual"] = worst["deldel"]
    checks["hodge_sign_residual"] = worst["hodge"]
    checks["adjointness_residual"] = worst["adjoint"]
    verdict = all(v <= 1e-10 for v in worst.values())
    if outdir is not None:
        (outdir / "identities.json").write_text(json.dumps(checks, indent=2, sort_keys=True))
    return rows, {"identities_pass": verdict, **checks}


def experiment_solve(st, seed, mass=0.5, outdir=None):
    rng = make_rng(seed, 2)
    slc = cauchy_slice(st, st.steps // 2)
    a0 = random_form(slc.geometry, 1, rng)
    ad = random_form(slc.geometry, 1, rng)
    source = random_form(st.geometry, 1, rng, time_pad=4)
    data = reduced_to_full(a0, ad, slc)
    run = evolve(st, mass, data, source=source)
    resid = run.residual_interior()
    norm = run.solution.l2()
    record = {
        "mass": mass,
        "residuals": {"interior": resid},
        "cfl": st.cfl,
        "norms": {"solution_l2": norm, "source_l2": source.l2()},
    }
    if outdir is not None:
        (outdir / "solution.form").write_bytes(to_bytes(run.solution))
        (outdir / "solve.json").write_text(json.dumps(record, indent=2, sort_keys=True))
    rows = [("solve", "interior_residual", resid), ("solve", "solution_l2", norm)]
    return rows, {"solve_pass": resid <= 1e-10, "solve_record": record}


def experiment_proca(st, seed, mass=0.5, mode="unconstrained", outdir=None,
                     source_path=None, data_path=None, test_form_path=None):
    from .forms import from_bytes
    from .cauchy import InitialDataPair

    rng = make_rng(seed, 3)
    slc = cauchy_slice(st, st.steps // 2)
    # seeded defaults first, file-supplied inputs override
    j = int_delta(random_form(st.geometry, 2, rng, time_pad=5))
    a0 = random_form(slc.geometry, 1, rng)
    ad = random_form(slc.geometry, 1, rng)
    F = random_form(st.geometry, 1, rng, time_pad=5)
    if source_path:
        j = from_bytes(st.geometry, Path(source_path).read_bytes())
    if test_form_path:
        F = from_bytes(st.geometry, Path(test_form_path).read_bytes())
    if data_path:
        data = InitialDataPair.deserialize(Path(data_path).read_bytes(), slc)
        a0, ad = data.a0, data.ad
    else:
        data = reduced_to_full(a0, ad, slc, m=mass, source=j, constrained=True)
    results = {"mass": mass, "mode": mode}
    rows = []
    if mode in ("constrained", "unconstrained"):
        run = proca_mod.evolve_proca(st, mass, j, data)
        vc = proca_mod.solve_proca_constrained(st, mass, j, data, F)
        vu = proca_mod.solve_proca_unconstrained(st, mass, j, (a0, ad, slc), F)
        direct = pairing(run.solution, F)
        results["constraint_sup"] = run.constraint_sup()
        results["value_constrained"] = [vc.real, vc.imag]
        results["value_unconstrained"] = [vu.real, vu.imag]
        results["paths_rel_diff"] = abs(vc - vu) / (1.0 + abs(vc))
        results["direct_rel_diff"] = abs(direct - vu) / (1.0 + abs(direct))
        rows += [("proca", "constraint_sup", results["constraint_sup"]),
                 ("proca", "paths_rel_diff", results["paths_rel_diff"])]
        ok = results["constraint_sup"] <= 1e-8 and results["paths_rel_diff"] <= 1e-6
    else:  # propagator mode
        GF = proca_mod.causal_propagator_G(st, mass, F)
        resid = (proca_mod.proca_apply(GF, mass)).comps[:, 3:-3]
        results["propagator_residual"] = float(np.max(np.abs(resid))) / (1.0 + F.max_abs())
        rows += [("proca", "propagator_residual", results["propagator_residual"])]
        ok = results["propagator_residual"] <= 1e-8
    if outdir is not None:
        (outdir / "proca.json").write_text(json.dumps(results, indent=2, sort_keys=True))
    return rows, {"proca_pass": bool(ok), "proca_record": results}


def _scan_one_mass(args):
    st, j, data, probes, m = args
    out = {}
    for name, (F, kind) in probes.items():
        GF = proca_mod.causal_propagator_G(st, m, F)
        value = proca_mod.solve_proca_unconstrained(st, m, j, data, F)
        out[name] = {
            "mass": m,
            "value": value,
            "G_norm": interior_max_abs(GF),
        }
    return m, out


def experiment_mass_scan(st, seed, masses=None, probe_kinds=("co-closed", "closed", "generic"),
                         constrained=True, threads=1, outdir=None):
    """Classification scan; with constrained=True also traces the limit
    dynamics for a conserved current against the matched normal datum."""
    rng = make_rng(seed, 4)
    slc = cauchy_slice(st, st.steps // 2)
    if masses is None:
        masses = masslimit.geometric_masses(1.0, 11)
    probes = {}
    for kind in probe_kinds:
        probes[kind] = (masslimit.make_probe(kind, st, rng, time_pad=6), kind)
    a0 = random_form(slc.geometry, 1, rng)
    ad = random_form(slc.geometry, 1, rng)
    data = (a0, ad, slc)
    job = [(st, None, data, probes, m) for m in masses]
    results = {}
    if threads > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as pool:
            for m, out in pool.map(_scan_one_mass, job):
                results[m] = out
    else:
        for args in job:
            m, out = _scan_one_mass(args)
            results[m] = out
    rows = []
    verdicts = {}
    csv_lines = ["probe,mass,value_re,value_im,g_norm,residual"]
    for name in sorted(probes):
        values = [results[m][name]["value"] for m in masses]
        gnorms = [results[m][name]["G_norm"] for m in masses]
        for i, m in enumerate(masses):
            rec = results[m][name]
            rows.append(("mass-scan/%s" % name, "m=%s/value_re" % _fmt(float(m)), rec["value"].real))
            rows.append(("mass-scan/%s" % name, "m=%s/G_norm" % _fmt(float(m)), rec["G_norm"]))
            diff = abs(values[i] - values[i - 1]) if i else 0.0
            csv_lines.append("%s,%s,%s,%s,%s,%s" % (name, _fmt(float(m)),
                                                    _fmt(rec["value"].real),
                                                    _fmt(rec["value"].imag),
                                                    _fmt(rec["G_norm"]), _fmt(diff)))
        scale = 1.0 + max(abs(v) for v in values)
        floor = masslimit.noise_floor(masses, data, probes[name][0], st)
        zero = max(abs(v) for v in values) <= floor
        verdicts[name] = {
            "converges": bool(masslimit.is_cauchy_convergent(values, scale) or zero),
            "trivially_zero": bool(zero),
            "slope": masslimit.fit_divergence_slope(masses, gnorms),
        }
    expected = {"co-closed": True, "closed": True, "generic": False}
    ok = all(verdicts[k]["converges"] == expected[k] for k in verdicts if k in expected)
    if "generic" in verdicts:
        ok = ok and abs(verdicts["generic"]["slope"] - 2.0) <= 0.05
    if constrained and st.dims == 1:
        j = int_delta(random_form(st.geometry, 2, rng, time_pad=8))
        rnj = rho_n(j, slc)
        matched = DifferentialForm(slc.geometry, 1)
        matched.comps[0] = np.cumsum(st.spatial_metric[0] * rnj.comps[0] * st.dx[0], axis=0)
        F = random_form(st.geometry, 1, rng, time_pad=8)
        dyn = masslimit.limit_dynamics_check(st, j, (a0, matched, slc), F, masses)
        res = [r["residual"] for r in dyn]
        for m, r in zip(masses, res):
            rows.append(("mass-scan/dynamics", "m=%s/residual" % _fmt(float(m)), r))
            csv_lines.append("dynamics,%s,,,,%s" % (_fmt(float(m)), _fmt(r)))
        verdicts["dynamics"] = {
            "monotone": bool(all(res[i + 1] < res[i] for i in range(len(res) - 1))),
            "final_residual": res[-1],
        }
        ok = ok and verdicts["dynamics"]["monotone"] and res[-1] <= 1e-3
    if outdir is not None:
        (outdir / "mass_scan.csv").write_text("\n".join(csv_lines) + "\n")
        (outdir / "mass_scan.json").write_text(json.dumps(
            {k: v for k, v in verdicts.items()}, indent=2, sort_keys=True))
    return rows, {"mass_scan_pass": bool(ok), "mass_scan_verdicts": verdicts}


def experiment_algebra(seed):
    rng = make_rng(seed, 5)
    gens = [ccr.Generator(i) for i in range(5)]
    raw = rng.integers(-9, 10, (5, 5))
    mat = [[ccr.QC(Fraction(int(raw[i][j] - raw[j][i]), 7)) for j in range(5)] for i in range(5)]
    oracle = ccr.oracle_from_matrix(mat)
    oracle.check_antisymmetry(gens)
    nf = lambda x: ccr.ccr_normal_form(x, oracle)

    central = True
    for i in range(5):
        for k in range(5):
            c = nf(ccr.commutator(ccr.TensorAlgebraElement.field(gens[i]),
                                  ccr.TensorAlgebraElement.field(gens[k])))
            central &= set(c.terms) <= {()}
            if set(c.terms) == {()}:
                central &= c.scalar_part() == ccr.QC_I * mat[i][k]

    recon = True
    for _ in range(25):
        terms = {}
        for _ in range(3):
            deg = int(rng.integers(0, 5))
            w = tuple(gens[int(x)] for x in rng.integers(0, 5, deg))
            terms[w] = ccr.QC(Fraction(int(rng.integers(-5, 6)), int(rng.integers(1, 5))), 1)
        elem = ccr.TensorAlgebraElement(terms)
        sym, ideal, wits = ccr.symmetrize_decompose(elem, oracle)
        recon &= (sym + ideal == elem)

    idealsym = ccr.only_symmetric_in_ideal_is_zero(50, rng, oracle, gens, 4)

    smap_vals = {i: ccr.QC(Fraction(int(rng.integers(-4, 5)), 3)) for i in range(5)}
    gamma_ok = True
    for _ in range(10):
        deg = int(rng.integers(0, 4))
        w = tuple(gens[int(x)] for x in rng.integers(0, 5, deg))
        elem = ccr.TensorAlgebraElement.word(w, ccr.QC(3, -2))
        smap = lambda gsym: smap_vals[gsym.gid]
        gamma_ok &= ccr.gamma_shift(ccr.gamma_shift(elem, smap, +1), smap, -1) == elem

    verdict = bool(central and recon and idealsym and gamma_ok)
    rows = [("algebra", "centrality", int(central)), ("algebra", "reconstruction", int(recon)),
            ("algebra", "ideal_symmetric_zero", int(idealsym)), ("algebra", "gamma_roundtrip", int(gamma_ok))]
    return rows, {"algebra_pass": verdict}


def experiment_weyl(seed, outdir=None, m0=1.0):
    rng = make_rng(seed, 6)
    raw = rng.standard_normal((4, 4))
    space = weyl_mod.presymplectic(raw - raw.T)
    s, _ = weyl_mod.dominating_form(space)

    worst_assoc = 0.0
    for _ in range(200):
        a, b, c = (weyl_mod.WeylCombination.symbol(tuple(rng.standard_normal(4))) for _ in range(3))
        lhs = weyl_mod.weyl_mul(weyl_mod.weyl_mul(a, b, space), c, space)
        rhs = weyl_mod.weyl_mul(a, weyl_mod.weyl_mul(b, c, space), space)
        worst_assoc = max(worst_assoc, weyl_mod.combination_distance(lhs, rhs))

    cs_bad = 0
    for _ in range(10000):
        F = rng.standard_normal(4)
        G = rng.standard_normal(4)
        if space.form(F, G) ** 2 > float(F @ s @ F) * float(G @ s @ G) * (1 + 1e-12) + 1e-12:
            cs_bad += 1

    state = weyl_mod.exponential_state(space, s)
    min_eig = 0.0
    cbound = True
    for _ in range(50):
        vs = [tuple(rng.standard_normal(4)) for _ in range(6)]
        min_eig = min(min_eig, state.min_positivity_eig(space, vs))
        cbound &= all(abs(state(v)) <= 1.0 + 1e-12 for v in vs)

    mock = weyl_mod.default_obstruction_mock(m0)
    masses = [m0 - 0.25, m0 - 0.1, m0, m0 + 0.1, m0 + 0.25]
    trace = weyl_mod.dynamics_ideal_obstruction(mock, (0.7, -0.3, 1.0), (0.7, -0.3, 0.0), masses)
    at_m0 = [r for r in trace if r["mass"] == m0][0]["proxy"]
    near = min(r["proxy"] for r in trace if r["mass"] != m0)

    spectrum = sorted(np.linalg.eigvalsh(
        state.positivity_matrix(space, [tuple(rng.standard_normal(4)) for _ in range(6)])).tolist())
    if outdir is not None:
        (outdir / "weyl.json").write_text(json.dumps({
            "norm_trace": trace,
            "positivity_spectrum": spectrum,
            "associativity_worst": worst_assoc,
        }, indent=2, sort_keys=True))

    verdict = (worst_assoc <= 1e-12 and cs_bad == 0 and min_eig >= -1e-10
               and cbound and at_m0 <= 1e-10 and near >= 1.9)
    rows = [("weyl", "assoc_worst", worst_assoc), ("weyl", "cs_violations", cs_bad),
            ("weyl", "min_positivity_eig", min_eig), ("weyl", "obstruction_at_m0", at_m0),
            ("weyl", "obstruction_near", near)]
    return rows, {"weyl_pass": bool(verdict), "weyl_trace": trace}


# ---------------------------------------------------------------------------
# orchestration


DEFAULT_CONFIG = """\
[spacetime]
dims = 1
extent = 32
dx = 0.5
steps = 64
dt = 0.25

[experiment]
kind = all
seed = 1
"""


def run(sections, outdir, seed=None, threads=1):
    """Execute the configured experiment; returns (exit_code, manifest)."""
    t_start = time.monotonic()
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    exp = sections.get("experiment", {})
    kind = exp.get("kind", "all")
    seed = int(exp.get("seed", 1)) if seed is None else int(seed)
    threads = int(exp.get("threads", threads or 1))
    st = spacetime_from_config(sections)

    rows = []
    verdicts = {}
    timings = {}

    def run_one(name, fn, *args, **kwargs):
        t0 = time.monotonic()
        r, v = fn(*args, **kwargs)
        timings[name] = time.monotonic() - t0
        rows.extend(r)
        verdicts.update(v)

    wanted = [kind] if kind != "all" else ["identities", "solve", "proca", "mass-scan",
                                           "algebra", "weyl"]
    for name in wanted:
        if name == "identities":
            run_one(name, experiment_identities, st, seed, outdir=outdir)
        elif name == "solve":
            run_one(name, experiment_solve, st, seed,
                    mass=float(exp.get("mass", 0.5)), outdir=outdir)
        elif name == "proca":
            run_one(name, experiment_proca, st, seed,
                    mass=float(exp.get("mass", 0.5)),
                    mode=exp.get("mode", "unconstrained"), outdir=outdir,
                    source_path=exp.get("source"), data_path=exp.get("data"),
                    test_form_path=exp.get("test_form"))
        elif name == "mass-scan":
            masses = [float(x) for x in exp["masses"].split()] if "masses" in exp else None
            kinds = tuple(exp["probes"].split()) if "probes" in exp else ("co-closed", "closed", "generic")
            constrained = exp.get("constrained", "true").lower() == "true"
            run_one(name, experiment_mass_scan, st, seed, masses=masses, probe_kinds=kinds,
                    constrained=constrained, threads=threads, outdir=outdir)
        elif name == "algebra":
            run_one(name, experiment_algebra, seed)
        elif name == "weyl":
            run_one(name, experiment_weyl, seed, outdir=outdir)
        else:
            raise ConfigError("unknown experiment kind %r" % name)

    # deterministic CSV: fixed row order, repr formatting
    lines = ["experiment,quantity,value"]
    for exp_name, quantity, value in rows:
        lines.append("%s,%s,%s" % (exp_name, quantity, _fmt(value)))
    (outdir / "results.csv").write_text("\n".join(lines) + "\n")

    passes = {k: v for k, v in verdicts.items() if k.endswith("_pass")}
    all_pass = all(passes.values()) if passes else True
    manifest = {
        "config": {sec: dict(vals) for sec, vals in sections.items()},
        "seed": seed,
        "threads": threads,
        "version": __version__,
        "numpy": np.__version__,
        "verdicts": {k: v for k, v in verdicts.items()
                     if isinstance(v, (bool, int, float, str))},
        "timings": timings,
        "elapsed": time.monotonic() - t_start,
        "all_pass": bool(all_pass),
    }
    (outdir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
    if not all_pass:
        failing = sorted(k for k, v in passes.items() if not v)
        manifest["failing"] = failing
        return 1, manifest
    return 0, manifest


def main(argv=None):
    parser = argparse.ArgumentParser(prog="procalab",
                                     description="lattice field-theory experiment runner")
    parser.add_argument("command", choices=["identities", "solve", "proca", "mass-scan",
                                            "algebra", "weyl", "all"])
    parser.add_argument("--config", type=Path, default=None)
    parser.add_argument("--out", type=Path, default=Path("procalab-out"))
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--mass", type=float, default=None)
    parser.add_argument("--mode", choices=["constrained", "unconstrained", "propagator"],
                        default=None)
    parser.add_argument("--source", type=Path, default=None,
                        help="serialized one-form to use as the external current")
    parser.add_argument("--data", type=Path, default=None,
                        help="serialized four-block Cauchy data")
    parser.add_argument("--test-form", type=Path, default=None,
                        help="serialized one-form to smear solutions with")
    parser.add_argument("--probes", type=str, default=None,
                        help="space-separated probe kinds for mass-scan")
    parser.add_argument("--masses", type=str, default=None,
                        help="space-separated mass values for mass-scan")
    parser.add_argument("--constrained", choices=["true", "false"], default=None)
    args = parser.parse_args(argv)

    try:
        text = args.config.read_text() if args.config else DEFAULT_CONFIG
        sections = parse_config(text)
        exp = sections.setdefault("experiment", {})
        exp["kind"] = args.command
        for key, value in (("mode", args.mode), ("mass", args.mass),
                           ("source", args.source), ("data", args.data),
                           ("test_form", args.test_form), ("probes", args.probes),
                           ("masses", args.masses), ("constrained", args.constrained)):
            if value is not None:
                exp[key] = str(value)
        code, manifest = run(sections, args.out, seed=args.seed, threads=args.threads)
    except (ConfigError, LatticeError) as exc:
        print("config error: %s" % exc, file=sys.stderr)
        return 2
    except SolverError as exc:
        print("solver error: %s" % exc, file=sys.stderr)
        return 1
    if code != 0:
        print("failing checks: %s" % ", ".join(manifest.get("failing", [])), file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
