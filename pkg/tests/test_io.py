"""CSV round-trips, JSON serialization, hashing, run manifests."""

import hashlib
import json
import types

import numpy as np
import pytest

from bohmsim import IntegratorConfig, presets
from bohmsim.dynamics import integrate_trajectory, integrate_with_deviation
from bohmsim.errors import ConfigError, GeometryMismatchError
from bohmsim.io import (
    RunManifest,
    file_sha256,
    read_histogram_csv,
    read_trajectory_csv,
    write_histogram_csv,
    write_nodal_line_csv,
    write_node_track_csv,
    write_polylines_csv,
    write_report_json,
    write_section_csv,
    write_trajectory_csv,
)
from bohmsim.npxpc import NodalRecord


# ------------------------------------------------------------ trajectories

def test_trajectory_csv_roundtrip_is_bit_exact(qubit_max, cfg, tmp_path):
    path, _ = integrate_with_deviation(qubit_max, (2.0, -2.0), None,
                                       0.0, 5.0, cfg, dt=0.5)
    fname = tmp_path / "traj.csv"
    write_trajectory_csv(path, fname)
    with open(fname) as fh:
        assert fh.readline().strip() == "t,x,y,chi"
    times, points, chi = read_trajectory_csv(fname)
    # %.17g preserves every float64 exactly
    assert np.array_equal(times, np.asarray(path.times, dtype=float))
    assert np.array_equal(points, np.asarray(path.points, dtype=float))
    assert np.array_equal(chi, np.asarray(path.chi, dtype=float))


def test_trajectory_csv_three_dim_no_chi(cfg, tmp_path):
    m = presets.pear_3d()
    path = integrate_trajectory(m, presets.PEAR_ICS["volume"], 0.0, 1.0, cfg,
                                dt=0.25)
    fname = tmp_path / "traj3.csv"
    write_trajectory_csv(path, fname)
    with open(fname) as fh:
        assert fh.readline().strip() == "t,x,y,z"
    times, points, chi = read_trajectory_csv(fname)
    assert chi is None
    assert points.shape == (5, 3)
    assert np.array_equal(points, np.asarray(path.points, dtype=float))


def test_trajectory_csv_digit_limited_mode(tmp_path):
    path = types.SimpleNamespace(
        dim=2, chi=None,
        times=[0.0, 0.1],
        points=[(1.2345678901234567, -2.0), (0.5, 0.25)],
    )
    fname = tmp_path / "short.csv"
    write_trajectory_csv(path, fname, digits=8)
    _, points, _ = read_trajectory_csv(fname)
    assert points[0, 0] != 1.2345678901234567  # rounded away
    assert points[0, 0] == pytest.approx(1.2345678901234567, rel=1e-7)


# -------------------------------------------------------------- histograms

def _sample_grid():
    from bohmsim.analysis import HistogramGrid

    g = HistogramGrid(bounds=(-2.0, 2.0, -1.0, 3.0), nx=4, ny=5)
    rng = np.random.default_rng(5)
    g.accumulate(rng.uniform(-2.5, 3.0, size=(200, 2)))
    return g


def test_histogram_csv_roundtrip(tmp_path):
    g = _sample_grid()
    fname = tmp_path / "hist.csv"
    write_histogram_csv(g, fname)
    back = read_histogram_csv(fname)
    assert back.geometry() == g.geometry()
    assert np.array_equal(back.counts, g.counts)
    assert back.total == g.total


def test_histogram_csv_header_validation(tmp_path):
    g = _sample_grid()
    fname = tmp_path / "hist.csv"
    write_histogram_csv(g, fname)
    lines = open(fname).read().splitlines(keepends=True)

    bad = tmp_path / "bad.csv"
    bad.write_text("".join(lines[1:]))  # header dropped
    with pytest.raises(ConfigError, match="missing histogram header"):
        read_histogram_csv(bad)

    bad.write_text("# 1,2,3\n" + "".join(lines[1:]))
    with pytest.raises(ConfigError, match="malformed"):
        read_histogram_csv(bad)

    parts = lines[0][2:].strip().split(",")
    parts[5] = str(int(parts[5]) + 1)  # ny no longer matches the block
    bad.write_text("# " + ",".join(parts) + "\n" + "".join(lines[1:]))
    with pytest.raises(GeometryMismatchError):
        read_histogram_csv(bad)

    parts = lines[0][2:].strip().split(",")
    parts[6] = str(int(parts[6]) + 7)  # total lies
    bad.write_text("# " + ",".join(parts) + "\n" + "".join(lines[1:]))
    with pytest.raises(ConfigError, match="total"):
        read_histogram_csv(bad)


# --------------------------------------------------- node and curve writers

def test_node_track_csv_layout(tmp_path):
    records = [
        NodalRecord(t=0.5, position=(1.25, -0.5), k=1, label="attractor",
                    eigenvalues=np.array([1.0 + 2.0j, 3.0 - 4.0j])),
        NodalRecord(t=1.0, k=2, at_infinity=True),
    ]
    fname = tmp_path / "nodes.csv"
    write_node_track_csv(records, fname)
    lines = open(fname).read().splitlines()
    assert lines[0] == "t,k,x,y,class,lambda_re1,lambda_im1,lambda_re2,lambda_im2"
    assert len(lines) == 3
    row = lines[1].split(",")
    assert float(row[0]) == 0.5 and int(row[1]) == 1
    assert (float(row[2]), float(row[3])) == (1.25, -0.5)
    assert row[4] == "attractor"
    assert [float(v) for v in row[5:]] == [1.0, 2.0, 3.0, -4.0]
    inf_row = lines[2].split(",")
    assert inf_row[2] == "" and inf_row[3] == "" and inf_row[4] == ""


def test_polylines_csv_layout(tmp_path):
    br = types.SimpleNamespace(
        name="stable+",
        frame_points=[(0.0, 0.0), (0.1, 0.2)],
        lab_points=[(1.0, 1.0), (1.1, 1.2)],
    )
    fname = tmp_path / "curves.csv"
    write_polylines_csv([br, br], fname)
    lines = open(fname).read().splitlines()
    assert lines[0] == "branch,u,v,x,y"
    assert len(lines) == 5
    assert lines[2].split(",") == ["stable+", "0.10000000000000001",
                                  "0.20000000000000001", "1.1000000000000001",
                                  "1.2"]


def test_nodal_line_csv_layout(tmp_path):
    line = types.SimpleNamespace(
        points=[(0.0, 0.0, 0.5), (0.01, -0.01, 0.5)],
        tangents=[(1.0, 0.0, 0.0), (1.0, 0.0, 0.0)],
        residuals=[1e-12, 2e-12],
    )
    fname = tmp_path / "line.csv"
    write_nodal_line_csv(line, fname)
    lines = open(fname).read().splitlines()
    assert lines[0] == "x,y,z,tx,ty,tz,residual"
    assert len(lines) == 3
    assert float(lines[2].split(",")[-1]) == 2e-12


def test_section_csv_layout(tmp_path):
    rows = [(1, 10.5, (0.25, -0.75)), (2, 21.0, (0.5, 0.125))]
    fname = tmp_path / "section.csv"
    write_section_csv(rows, fname)
    lines = open(fname).read().splitlines()
    assert lines[0] == "k,t,x,xdot"
    assert lines[1] == "1,10.5,0.25,-0.75"
    assert lines[2] == "2,21,0.5,0.125"


# ----------------------------------------------------------- JSON and hash

def test_report_json_serializes_numpy_and_complex(tmp_path):
    report = {
        "n": np.int64(12),
        "slope": np.float64(-1.5),
        "eigs": np.array([1.0, 2.0]),
        "lam": 1.5 - 0.5j,
    }
    fname = tmp_path / "report.json"
    write_report_json(report, fname)
    back = json.load(open(fname))
    assert back == {"n": 12, "slope": -1.5, "eigs": [1.0, 2.0],
                    "lam": {"re": 1.5, "im": -0.5}}
    with pytest.raises(TypeError):
        write_report_json({"bad": object()}, tmp_path / "nope.json")


def test_file_sha256_matches_hashlib(tmp_path):
    fname = tmp_path / "blob.bin"
    payload = bytes(range(256)) * 300
    fname.write_bytes(payload)
    assert file_sha256(fname) == hashlib.sha256(payload).hexdigest()


# ----------------------------------------------------------------- manifest

def test_manifest_roundtrip_and_basenames(tmp_path):
    out = tmp_path / "hist.csv"
    write_histogram_csv(_sample_grid(), out)
    m = RunManifest(command="ensemble", config={"model": {"preset": "qubit"}},
                    seed=2026, workers=4).start()
    m.add_output(out)
    mf = tmp_path / "manifest.json"
    m.finish(mf)
    back = RunManifest.load(mf)
    assert back.command == "ensemble"
    assert back.config == {"model": {"preset": "qubit"}}
    assert back.seed == 2026 and back.workers == 4
    assert back.outputs == [{"file": "hist.csv", "sha256": file_sha256(out)}]
    assert back.started is not None and back.finished >= back.started


def test_manifest_verify_flags_tampering(tmp_path):
    out = tmp_path / "hist.csv"
    write_histogram_csv(_sample_grid(), out)
    recorded = RunManifest(command="ensemble", config={}).start()
    recorded.add_output(out)

    replay_ok = RunManifest(command="ensemble", config={}).start()
    replay_ok.add_output(out)
    assert replay_ok.verify_outputs(recorded) == []

    with open(out, "a") as fh:
        fh.write("0,0,0,0,0\n")
    tampered = RunManifest(command="ensemble", config={}).start()
    tampered.add_output(out)
    problems = tampered.verify_outputs(recorded)
    assert len(problems) == 1 and "hist.csv" in problems[0]

    empty = RunManifest(command="ensemble", config={})
    assert empty.verify_outputs(recorded) == ["missing output hist.csv"]
