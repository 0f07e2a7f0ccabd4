"""End-to-end CLI runs, in process, against temporary output directories."""

import json

import pytest

from bohmsim import cli
from bohmsim.io import read_trajectory_csv


def run(*argv):
    return cli.main(list(argv))


# ------------------------------------------------------------ basic wiring

def test_traj_writes_csv_and_manifest(tmp_path):
    out = tmp_path / "run"
    assert run("traj", "--ic", "1,1", "--t-end", "2", "--out", str(out)) == 0
    times, points, chi = read_trajectory_csv(out / "traj.csv")
    assert times[0] == 0.0 and times[-1] == pytest.approx(2.0)
    assert points.shape[1] == 2 and chi is None
    manifest = json.load(open(out / "manifest.json"))
    assert manifest["command"] == "traj"
    assert [o["file"] for o in manifest["outputs"]] == ["traj.csv"]


def test_traj_requires_ic_and_horizon(tmp_path, capsys):
    assert run("traj", "--t-end", "2", "--out", str(tmp_path)) == 1
    assert "--ic is required" in capsys.readouterr().err
    assert run("traj", "--ic", "1,1", "--out", str(tmp_path)) == 1
    assert "--t-end is required" in capsys.readouterr().err


def test_usage_errors_exit_one(capsys):
    with pytest.raises(SystemExit) as exc:
        run("traj", "--bogus")
    assert exc.value.code == 1
    assert run() == 1  # no subcommand prints usage
    with pytest.raises(SystemExit) as exc:
        run("--version")
    assert exc.value.code == 0


def test_negative_vector_values_parse(tmp_path):
    out = tmp_path / "lcn"
    assert run("lcn", "--ic", "-1,-1", "--t-end", "110",
               "--out", str(out)) == 0
    report = json.load(open(out / "lcn.json"))
    assert report["classification"] in ("ordered", "chaotic", "undetermined")
    assert report["steps"] > 0
    _, points, chi = read_trajectory_csv(out / "lcn.csv")
    assert points[0].tolist() == [-1.0, -1.0]
    assert chi is not None


def test_malformed_ic_is_config_error(tmp_path, capsys):
    assert run("traj", "--ic", "1,abc", "--t-end", "1",
               "--out", str(tmp_path)) == 1
    assert "config error" in capsys.readouterr().err


def test_bad_config_file_exits_one(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"model": {"preset": "qubit_max"}, "bogus": {}}')
    assert run("traj", "--config", str(bad), "--ic", "1,1", "--t-end", "1",
               "--out", str(tmp_path)) == 1
    assert "config error" in capsys.readouterr().err


def test_out_env_fallback(tmp_path, monkeypatch):
    monkeypatch.setenv("BOHMSIM_OUT", str(tmp_path / "envout"))
    assert run("traj", "--ic", "1,1", "--t-end", "1") == 0
    assert (tmp_path / "envout" / "traj.csv").exists()


# --------------------------------------------------------------- sampling

def test_born_sample_deterministic_and_seed_sensitive(tmp_path):
    a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    assert run("born-sample", "--n", "25", "--seed", "5", "--out", str(a)) == 0
    assert run("born-sample", "--n", "25", "--seed", "5", "--out", str(b)) == 0
    assert run("born-sample", "--n", "25", "--seed", "6", "--out", str(c)) == 0
    rows = (a / "samples.csv").read_text().splitlines()
    assert rows[0] == "x,y" and len(rows) == 26
    assert (a / "samples.csv").read_bytes() == (b / "samples.csv").read_bytes()
    assert (a / "samples.csv").read_bytes() != (c / "samples.csv").read_bytes()


def test_ensemble_histogram_worker_invariant(tmp_path):
    w1, w2 = tmp_path / "w1", tmp_path / "w2"
    base = ("ensemble", "--n", "6", "--t-end", "10", "--dt", "0.5",
            "--grid", "45", "--seed", "3")
    assert run(*base, "--workers", "1", "--out", str(w1)) == 0
    assert run(*base, "--workers", "2", "--out", str(w2)) == 0
    assert (w1 / "histogram.csv").read_bytes() == (w2 / "histogram.csv").read_bytes()
    report = json.load(open(w1 / "ensemble.json"))
    assert report["mode"] == "ensemble" and report["n"] == 6
    assert report["failures"] == [] and report["seed"] == 3


# ------------------------------------------------------- other subcommands

def test_poincare_section_rows(tmp_path):
    out = tmp_path / "sec"
    assert run("poincare", "--count", "3", "--out", str(out)) == 0
    lines = (out / "section.csv").read_text().splitlines()
    assert lines[0] == "k,t,x,xdot" and len(lines) == 4


def test_surface_drift_report(tmp_path):
    out = tmp_path / "surf"
    assert run("surface", "--t-end", "5", "--out", str(out)) == 0
    report = json.load(open(out / "surface.json"))
    assert report["kind"] == "pear"
    assert report["drift"] < 1e-8


def test_surface_negative_z_exits_two(tmp_path, capsys):
    assert run("surface", "--ic", "1,1,-1", "--t-end", "1",
               "--out", str(tmp_path)) == 2
    assert "numerical failure" in capsys.readouterr().err


def test_xpoint_branches_written(tmp_path):
    out = tmp_path / "xp"
    assert run("xpoint", "--time", "1.27", "--arc-length", "0.5",
               "--out", str(out)) == 0
    report = json.load(open(out / "xpoint.json"))
    assert report["node_class"] in ("attractor", "repellor")
    assert set(report["branches"]) == {"stable+", "stable-",
                                       "unstable+", "unstable-"}
    lines = (out / "curves.csv").read_text().splitlines()
    assert lines[0] == "branch,u,v,x,y" and len(lines) > 100


def test_extended_precision_trajectory(tmp_path):
    out = tmp_path / "mp"
    assert run("traj", "--ic", "1,1", "--t-end", "0.5", "--precision", "25",
               "--out", str(out)) == 0
    times, points, _ = read_trajectory_csv(out / "traj.csv")
    assert times[-1] == pytest.approx(0.5)
    assert abs(points).max() < 10


# ----------------------------------------------------------------- replay

def test_replay_verifies_and_detects_tampering(tmp_path, capsys):
    out = tmp_path / "rep"
    assert run("ensemble", "--n", "4", "--t-end", "5", "--dt", "0.5",
               "--grid", "45", "--seed", "1", "--out", str(out)) == 0
    manifest = out / "manifest.json"
    assert run("--replay", str(manifest)) == 0
    assert "replay ok" in capsys.readouterr().out

    payload = json.loads(manifest.read_text())
    payload["outputs"][0]["sha256"] = "0" * 64
    manifest.write_text(json.dumps(payload))
    assert run("--replay", str(manifest)) == 2
    assert "replay mismatch" in capsys.readouterr().err
