import json

import pytest

from rholoewner import cli


def run(*argv):
    return cli.main([str(a) for a in argv])


def test_trace_writes_all_formats(tmp_path):
    assert run("trace", "--family", "chordal", "--rho", 2, "--x0", 1, "--T", 1, "--steps", 200, "--out", tmp_path) == 0
    assert (tmp_path / "trace.csv").read_text().startswith("t,re,im\n")
    svg = (tmp_path / "trace.svg").read_text()
    assert svg.startswith("<svg") and "x0" in svg
    assert json.loads((tmp_path / "trace.json").read_text())["n_points"] == 201


def test_format_selects_one_artifact(tmp_path):
    run("trace", "--family", "zero", "--steps", 10, "--format", "json", "--out", tmp_path)
    assert sorted(p.name for p in tmp_path.iterdir()) == ["trace.json"]


def test_wholeplane_circle(tmp_path):
    run("trace", "--family", "wholeplane", "--rho", -6, "--out", tmp_path, "--format", "json")
    body = json.loads((tmp_path / "trace.json").read_text())
    assert body["circle_fit_residual"] < 1e-6


def test_energy_report(tmp_path, capsys):
    assert run("energy", "--family", "chordal", "--rho", 1, "--x0", 1, "--T", 1, "--out", tmp_path) == 0
    body = json.loads((tmp_path / "energy.json").read_text())
    assert abs(body["direct"]) < 1e-10
    assert all(c["ok"] for c in body["certificates"])
    assert json.loads(capsys.readouterr().out)["command"] == "energy"


def test_energy_from_csv(tmp_path):
    src = tmp_path / "w.csv"
    src.write_text("t,value\n" + "".join(f"{k / 100},{0.3 * (k / 100) ** 2}\n" for k in range(101)))
    assert run("energy", "--family", "csv", "--driving-csv", src, "--rho", 0, "--x0", 2, "--out", tmp_path) == 0
    body = json.loads((tmp_path / "energy.json").read_text())
    # W = 0.3 t^2 has energy 0.5 * int (0.6 t)^2 = 0.06
    assert body["direct"] == pytest.approx(0.06, rel=1e-3)


@pytest.mark.parametrize("kind,extra", [("boundary", ["--x0", 1]), ("interior", ["--z0", "0.5+0.866j"]),
                                        ("wholeplane", [])])
def test_flowline(tmp_path, kind, extra):
    rho = -4 if kind == "interior" else (-3 if kind == "wholeplane" else 1)
    assert run("flowline", "--kind", kind, "--rho", rho, *extra, "--out", tmp_path) == 0
    body = json.loads((tmp_path / "flowline.json").read_text())
    assert body["relative_to_diameter"] < 1e-2


def test_sample_is_reproducible(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    args = ["sample", "--kappa", 1, "--rho", 1, "--v0", 3.14159, "--paths", 200, "--seed", 7, "--format", "json"]
    run(*args, "--out", a)
    run(*args, "--out", b)
    assert (a / "sample.json").read_bytes() == (b / "sample.json").read_bytes()
    body = json.loads((a / "sample.json").read_text())
    assert body["hit_frequency"]["n_paths"] == 200


def test_dirichlet(tmp_path):
    assert run("dirichlet", "--beta", 0.4, "--R", "10,20,40,80", "--resolution", 40, "--out", tmp_path) == 0
    body = json.loads((tmp_path / "dirichlet.json").read_text())
    assert body["slope"] == pytest.approx(body["c_beta"], rel=1e-2)
    assert len((tmp_path / "dirichlet.csv").read_text().splitlines()) == 5


def test_config_overrides_flags(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment\nsteps = 50\nrho=0\n")
    run("trace", "--family", "chordal", "--rho", 2, "--x0", 1, "--steps", 500, "--config", cfg,
        "--out", tmp_path, "--format", "json")
    body = json.loads((tmp_path / "trace.json").read_text())
    assert body["n_points"] == 51 and body["rho"] == 0


def test_unknown_config_key(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("colour=blue\n")
    assert run("trace", "--config", cfg, "--out", tmp_path) == 2
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "config"
    assert json.loads((tmp_path / "error.json").read_text()) == err


def test_horizon_error_is_reported(tmp_path, capsys):
    assert run("energy", "--family", "chordal", "--rho", -3, "--x0", 1, "--T", 1, "--out", tmp_path) == 2
    assert json.loads(capsys.readouterr().err)["error"] == "config"


def test_force_point_required(tmp_path):
    assert run("energy", "--family", "ray", "--rho", 1, "--out", tmp_path) == 2


def test_env_var_sets_output(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.ENV_OUT, str(tmp_path / "env"))
    run("trace", "--family", "zero", "--steps", 10, "--format", "csv")
    assert (tmp_path / "env" / "trace.csv").exists()


def test_verify_subset(tmp_path, capsys):
    assert run("verify", "--only", "1,3", "--out", tmp_path) == 0
    lines = [l for l in capsys.readouterr().out.splitlines() if l.startswith("[")]
    assert [l.split()[1] for l in lines] == ["AC01", "AC03"]
    body = json.loads((tmp_path / "verify.json").read_text())
    assert body["all_passed"]
