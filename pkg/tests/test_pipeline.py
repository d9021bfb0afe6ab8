import json
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from isoplane import cli, fem, pipeline
from isoplane.config import ConfigError, ScenarioConfig, parse_config, serialize_config

# coarse but valid scenario for plumbing tests
FAST = dict(h_m=0.00125, n_radii=100, grid_spacing_m=0.01)


# -- config -------------------------------------------------------------------


def test_config_round_trip():
    text = """
    # flagship, coarse
    material.mu_star_gpa = 1.967
    domain.side_m = 2.5   # larger domain
    fit.angles_deg = 0, 15, 30, 45
    load.mode = analytic-traction
    """
    cfg = parse_config(text)
    assert cfg.mu_star_gpa == 1.967 and cfg.side_m == 2.5
    assert cfg.angles_deg == (0.0, 15.0, 30.0, 45.0)
    once = serialize_config(cfg)
    assert serialize_config(parse_config(once)) == once
    assert parse_config(once) == cfg


@pytest.mark.parametrize(
    "text",
    [
        "material.kappa = 3",  # unknown key
        "material.mu_gpa 3",  # missing '='
        "material.mu_gpa = abc",
        "material.mu_gpa = -1",
        "domain.hole_diameter_m = 2",
        "mesh.h_m = 0.01",  # larger than the hole radius
        "fit.radius_m = 0.9",
        "load.mode = pressure",
        "fit.radial_spacing = cubic",
    ],
)
def test_config_rejects(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_config_material_in_pa():
    m = ScenarioConfig().material()
    assert_allclose([m.kappa, m.mu, m.mu_star], [7.645e9, 5.901e9, 0.626e9])


# -- scenario runner ---------------------------------------------------------------


@pytest.fixture(scope="module")
def fast_record():
    return pipeline.run_scenario(ScenarioConfig(**FAST))


def test_record_contents(fast_record):
    d = fast_record.to_dict()
    assert set(d) == {"config", "norris", "fits", "mesh", "solver"}
    assert_allclose(d["norris"]["mu_log_gpa"], 1.53573, rtol=1e-5)
    for name in ("norm", "fullfield"):
        assert d["fits"][name]["mu_iso"] > 0 and d["fits"][name]["kappa_iso"] > 0
    assert max(d["solver"]["relative_residual"].values()) < 1e-10
    json.dumps(d)  # plain JSON types only


def test_write_record_and_determinism(tmp_path, fast_record):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    pipeline.write_record(fast_record, out1)
    pipeline.write_record(pipeline.run_scenario(ScenarioConfig(**FAST)), out2)
    assert (out1 / "run.json").read_bytes() == (out2 / "run.json").read_bytes()
    for kind in ("couple", "dilatation"):
        assert (out1 / f"{kind}_profile.csv").read_text().splitlines()[0] == "r,unorm"
        assert (out1 / f"{kind}_grid.csv").read_text().splitlines()[0] == "x1,x2,u1,u2"
        assert (out1 / f"{kind}_grid.csv").read_bytes() == (out2 / f"{kind}_grid.csv").read_bytes()
    prof = np.loadtxt(out1 / "couple_profile.csv", delimiter=",", skiprows=1)
    assert prof.shape == (100, 2)
    assert "total_s" in json.loads((out1 / "timings.json").read_text())
    assert not list(out1.glob("*.tmp"))


def test_fit_failure_recorded(monkeypatch):
    def boom(*args, **kwargs):
        raise pipeline.fitting.FitError("synthetic")

    monkeypatch.setattr(pipeline.fitting, "fullfield_fit", boom)
    rec = pipeline.run_scenario(ScenarioConfig(**FAST))
    assert rec.fits["fullfield"] == {"method": "fullfield", "error": "synthetic"}
    assert "ratios" in rec.fits["norm"]


def test_export_mesh_field(tmp_path):
    mesh = fem.generate_mesh(0.1, 0.005, 0.002)
    fld = fem.DisplacementField(mesh, np.arange(2 * mesh.n_nodes, dtype=float).reshape(-1, 2))
    nodes, tris = pipeline.export_mesh_field(fld, tmp_path / "m")
    data = np.loadtxt(nodes, delimiter=",", skiprows=1)
    assert_allclose(data[:, 1:3], mesh.nodes, rtol=1e-12)
    assert_allclose(data[:, 3:], fld.u)
    assert (np.loadtxt(tris, delimiter=",", skiprows=1, dtype=int) == mesh.triangles).all()


def _fake_record(ratio):
    fit = {"ratios": {"mu_iso/mu_log": ratio, "kappa_iso/kappa": ratio, "mu_iso/mu": ratio}}
    return pipeline.RunRecord({}, {}, {"norm": fit, "fullfield": fit}, {}, {})


def test_table_checks_tolerances():
    labels = [lbl for lbl, _ in pipeline.table_configs(2)]
    recs = dict(zip(labels, [_fake_record(v) for v in pipeline.TABLE2["mu_iso/mu_log"]]))
    checks = pipeline.table_checks(2, recs)
    mu_rows = [c for c in checks if "mu_iso" in c.quantity]
    assert all(c.passed for c in mu_rows)
    assert len(checks) == 10
    bad = pipeline.Check(2, "x", "q", 1.0, 1.031, 0.03)
    assert not bad.passed and "FAIL" in bad.line()


def test_table_configs():
    t1 = pipeline.table_configs(1)
    assert [c.side_m for _, c in t1] == [0.5, 1.0, 2.5, 10.0]
    assert all(c.mu_star_gpa == c.mu_gpa for _, c in t1)
    t2 = pipeline.table_configs(3)
    assert [c.mu_star_gpa for _, c in t2] == list(pipeline.MU_STAR_SWEEP)
    assert all((c.kappa_gpa, c.mu_gpa) == (7.645, 5.901) for _, c in t2)


# -- CLI ---------------------------------------------------------------------------


def test_cli_norris_flagship(capsys):
    assert cli.main(["norris", "--json"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert_allclose(rep["mu_euclid_gpa"], 2.7360, rtol=1e-12)
    assert_allclose(rep["mu_log_gpa"], 1.5358, rtol=5e-5)
    assert rep["kappa_iso_gpa"] == 7.645
    # reverse generators reproduce the input
    assert_allclose(rep["mu_euclid_gpa"] + 3 * rep["reverse_euclid"]["c_gpa"], 5.901, rtol=1e-12)
    assert_allclose(rep["mu_log_gpa"] / rep["reverse_log"]["c"] ** 2, 0.626, rtol=1e-12)


def test_cli_norris_isotropic_echo(capsys):
    assert cli.main(["norris", "--json", "--mu-star-gpa", "5.901"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["mu_euclid_gpa"] == rep["mu_log_gpa"] == 5.901


def test_cli_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "s.cfg"
    cfg.write_text("material.mu_gpa = 1\nmaterial.mu_star_gpa = 6\nmaterial.kappa_gpa = 1\n")
    assert cli.main(["norris", "--json", "--config", str(cfg)]) == 0
    assert_allclose(json.loads(capsys.readouterr().out)["mu_euclid_gpa"], 4.0)
    assert cli.main(["norris", "--json", "--config", str(cfg), "--mu-star-gpa", "1"]) == 0
    assert_allclose(json.loads(capsys.readouterr().out)["mu_euclid_gpa"], 1.0)


def test_cli_config_errors(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("material.mu_gpa = = 3\n")
    assert cli.main(["norris", "--config", str(bad)]) == 2
    assert "configuration error" in capsys.readouterr().err
    assert cli.main(["norris", "--config", str(tmp_path / "missing.cfg")]) == 2
    assert cli.main(["norris", "--mu-gpa", "-3"]) == 2
    with pytest.raises(SystemExit) as exc:
        cli.main(["norris", "--no-such-flag"])
    assert exc.value.code == 2


def test_cli_analytic_eval(tmp_path, capsys):
    pts = tmp_path / "pts.csv"
    pts.write_text("x1,x2\n1,0\n0,0\n0,1\n")
    out = tmp_path / "u.csv"
    args = ["analytic-eval", "--kind", "couple", "--points", str(pts), "--out", str(out)]
    assert cli.main(args + ["--mu-star-gpa", "5.901", "--mu-gpa", "5.901"]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "x1,x2,u1,u2"
    rows = np.genfromtxt(out, delimiter=",", skip_header=1)
    assert_allclose(rows[0, 3], 1 / (4 * math.pi * 5.901e9), rtol=1e-12)
    assert np.isnan(rows[1, 2:]).all()
    assert_allclose(rows[2, 2], -1 / (4 * math.pi * 5.901e9), rtol=1e-12)


def test_cli_level_sets(tmp_path):
    lv = tmp_path / "lv.csv"
    args = ["analytic-eval", "--grid", "1", "41", "--out", str(tmp_path / "u.csv"), "--levels", "0.6,0.9"]
    assert cli.main(args + ["--level-out", str(lv), "--level-grid", "101"]) == 0
    data = np.loadtxt(lv, delimiter=",", skiprows=1)
    assert set(np.unique(data[:, 0])) == {0.6, 0.9}


def test_cli_fem_fit(tmp_path, capsys):
    out = tmp_path / "run"
    args = ["fem-fit", "--h-m", "0.00125", "--n-radii", "50", "--grid-spacing-m", "0.02", "--out-dir", str(out)]
    assert cli.main(args) == 0
    assert "mu_iso/mu_log" in capsys.readouterr().out
    assert json.loads((out / "run.json").read_text())["config"]["mesh.h_m"] == 0.00125


def test_cli_numerical_failure_exit_code(monkeypatch, tmp_path, capsys):
    def fail(*args, **kwargs):
        raise fem.SolverError("factorization failed")

    monkeypatch.setattr(pipeline, "run_scenario", fail)
    assert cli.main(["fem-fit", "--out-dir", str(tmp_path)]) == 1
    assert "numerical failure" in capsys.readouterr().err


def test_cli_reproduce_exit_codes(monkeypatch, capsys):
    good = [pipeline.Check(2, "r", "q", 1.0, 1.01, 0.03)]
    monkeypatch.setattr(pipeline, "reproduce_table", lambda *a, **k: good)
    assert cli.main(["reproduce-table", "2"]) == 0
    monkeypatch.setattr(pipeline, "reproduce_table", lambda *a, **k: good + [pipeline.Check(2, "r", "q", 1.0, 1.1, 0.03)])
    assert cli.main(["reproduce-table", "2"]) == 1
    assert "1/2 within tolerance" in capsys.readouterr().out
