import json

import pytest

from procalab.cli import (ConfigError, parse_config, spacetime_from_config, run,
                          main, DEFAULT_CONFIG)


SMALL = """\
[spacetime]
dims = 1
extent = 24
dx = 0.5
steps = 48
dt = 0.25

[experiment]
kind = identities
seed = 7
"""


def test_parse_sections():
    sections = parse_config(SMALL)
    assert sections["spacetime"]["dims"] == "1"
    assert sections["experiment"]["seed"] == "7"


def test_unknown_key_rejected_with_line():
    bad = SMALL + "wavelength = 3\n"
    with pytest.raises(ConfigError, match="experiment"):
        parse_config(bad)


def test_missing_dx_named():
    text = "[spacetime]\ndims = 1\nextent = 24\nsteps = 48\ndt = 0.25\n"
    with pytest.raises(ConfigError, match=r"\[spacetime\].dx"):
        spacetime_from_config(parse_config(text))


def test_key_outside_section():
    with pytest.raises(ConfigError, match="line 1"):
        parse_config("dims = 1\n")


def test_identities_run_manifest(tmp_path):
    code, manifest = run(parse_config(SMALL), tmp_path, seed=7)
    assert code == 0
    data = json.loads((tmp_path / "manifest.json").read_text())
    assert data["all_pass"] is True
    for key in ("dd_residual", "deldel_residual", "hodge_sign_residual",
                "adjointness_residual"):
        assert data["verdicts"][key] <= 1e-10
    assert (tmp_path / "results.csv").read_text().startswith("experiment,quantity,value")


def test_solve_emits_field_and_record(tmp_path):
    sections = parse_config(SMALL)
    sections["experiment"]["kind"] = "solve"
    code, _ = run(sections, tmp_path, seed=7)
    assert code == 0
    record = json.loads((tmp_path / "solve.json").read_text())
    assert set(record) == {"mass", "residuals", "cfl", "norms"}
    assert (tmp_path / "solution.form").exists()


def test_main_exit_codes(tmp_path, capsys):
    cfg = tmp_path / "broken.cfg"
    cfg.write_text("[spacetime]\ndims = 1\nextent = 24\nsteps = 48\ndt = 0.25\n")
    code = main(["identities", "--config", str(cfg), "--out", str(tmp_path / "o")])
    assert code == 2
    err = capsys.readouterr().err
    assert "[spacetime].dx" in err


def test_determinism_across_runs_and_threads(tmp_path):
    sections = parse_config(DEFAULT_CONFIG)
    sections["experiment"]["kind"] = "mass-scan"
    outs = []
    for tag, threads in (("a", 1), ("b", 1), ("c", 3)):
        out = tmp_path / tag
        code, _ = run(sections, out, seed=11, threads=threads)
        assert code == 0
        outs.append((out / "results.csv").read_bytes())
    assert outs[0] == outs[1] == outs[2]
