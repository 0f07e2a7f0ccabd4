"""CSV and JSON writers plus the run-manifest machinery.

All numeric outputs are CSV so any plotting stack can consume them.  File
contents are deterministic functions of the data: fixed formats, no
timestamps inside data files, counts written as plain integers.  Manifests
record enough (resolved config, seed, output hashes) to replay a run and
check byte identity.
"""

import hashlib
import json
import os
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, GeometryMismatchError
from . import __version__

TRAJ_FLOAT_FMT = "%.17g"


def _fmt(value, digits=None):
    """One number as text: %.17g for hardware, `digits` significant for mp."""
    if digits is None:
        return TRAJ_FLOAT_FMT % float(value)
    import mpmath

    return mpmath.nstr(mpmath.mpf(value), digits)


# ------------------------------------------------------------- trajectories

def write_trajectory_csv(path, fname, digits=None):
    """Columns t,x,y[,z][,chi]; one row per sample."""
    dim = path.dim
    cols = ["t"] + ["x", "y", "z"][:dim]
    if path.chi is not None:
        cols.append("chi")
    with open(fname, "w") as fh:
        fh.write(",".join(cols) + "\n")
        for i in range(len(path.times)):
            row = [_fmt(path.times[i], digits)]
            row += [_fmt(v, digits) for v in path.points[i]]
            if path.chi is not None:
                row.append(_fmt(path.chi[i], digits))
            fh.write(",".join(row) + "\n")


def read_trajectory_csv(fname):
    """Returns (times, points, chi or None) as float arrays."""
    with open(fname) as fh:
        header = fh.readline().strip().split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    has_chi = header[-1] == "chi"
    dim = len(header) - 1 - (1 if has_chi else 0)
    times = data[:, 0]
    points = data[:, 1 : 1 + dim]
    chi = data[:, 1 + dim] if has_chi else None
    return times, points, chi


# --------------------------------------------------------------- histograms

def write_histogram_csv(grid, fname):
    """Header `# xmin,xmax,ymin,ymax,nx,ny,total`, then row-major counts."""
    xmin, xmax, ymin, ymax = (float(b) for b in grid.bounds)
    with open(fname, "w") as fh:
        fh.write(
            "# %s,%s,%s,%s,%d,%d,%d\n"
            % (
                TRAJ_FLOAT_FMT % xmin, TRAJ_FLOAT_FMT % xmax,
                TRAJ_FLOAT_FMT % ymin, TRAJ_FLOAT_FMT % ymax,
                grid.nx, grid.ny, grid.total,
            )
        )
        for ix in range(grid.nx):
            fh.write(",".join(str(int(c)) for c in grid.counts[ix]) + "\n")


def read_histogram_csv(fname):
    from .analysis import HistogramGrid

    with open(fname) as fh:
        header = fh.readline().strip()
        if not header.startswith("# "):
            raise ConfigError(f"{fname}: missing histogram header line")
        parts = header[2:].split(",")
        if len(parts) != 7:
            raise ConfigError(f"{fname}: malformed histogram header {header!r}")
        xmin, xmax, ymin, ymax = (float(p) for p in parts[:4])
        nx, ny, total = (int(p) for p in parts[4:])
        counts = np.loadtxt(fh, delimiter=",", dtype=np.int64, ndmin=2)
    if counts.shape != (nx, ny):
        raise GeometryMismatchError(
            f"{fname}: count block is {counts.shape}, header says ({nx}, {ny})"
        )
    grid = HistogramGrid(bounds=(xmin, xmax, ymin, ymax), nx=nx, ny=ny,
                         counts=counts)
    if grid.total != total:
        raise ConfigError(
            f"{fname}: header total {total} != summed counts {grid.total}"
        )
    return grid


# ----------------------------------------------------- nodal and curve data

def write_node_track_csv(records, fname):
    """Rows t,k,x,y[,z],class,lambda_re1,lambda_im1,lambda_re2,lambda_im2.

    Works for per-time node lists (flattened) and single-time snapshots.
    At-infinity records and records without eigen-data get empty fields.
    """
    recs = list(records)
    dim = 2
    for r in recs:
        if r.position is not None:
            dim = len(r.position)
            break
    cols = ["t", "k"] + ["x", "y", "z"][:dim] + [
        "class", "lambda_re1", "lambda_im1", "lambda_re2", "lambda_im2"]
    with open(fname, "w") as fh:
        fh.write(",".join(cols) + "\n")
        for r in recs:
            row = [TRAJ_FLOAT_FMT % float(r.t), str(int(r.k))]
            if r.position is None or getattr(r, "at_infinity", False):
                row += [""] * dim
            else:
                row += [TRAJ_FLOAT_FMT % float(v) for v in r.position]
            row.append(r.label or "")
            if r.eigenvalues is None:
                row += [""] * 4
            else:
                for lam in r.eigenvalues[:2]:
                    row += [TRAJ_FLOAT_FMT % lam.real, TRAJ_FLOAT_FMT % lam.imag]
            fh.write(",".join(row) + "\n")


def write_polylines_csv(branches, fname):
    """Asymptotic curves or nodal lines; `branch` column tags each polyline."""
    with open(fname, "w") as fh:
        fh.write("branch,u,v,x,y\n")
        for br in branches:
            frame = np.asarray(br.frame_points)
            lab = np.asarray(br.lab_points)
            for (u, v), (x, y) in zip(frame, lab):
                fh.write(
                    "%s,%s,%s,%s,%s\n"
                    % (br.name, TRAJ_FLOAT_FMT % u, TRAJ_FLOAT_FMT % v,
                       TRAJ_FLOAT_FMT % x, TRAJ_FLOAT_FMT % y)
                )


def write_nodal_line_csv(line, fname):
    """3-D nodal line: arc-ordered points with tangents and residuals."""
    with open(fname, "w") as fh:
        fh.write("x,y,z,tx,ty,tz,residual\n")
        for p, tg, res in zip(line.points, line.tangents, line.residuals):
            vals = list(p) + list(tg) + [res]
            fh.write(",".join(TRAJ_FLOAT_FMT % float(v) for v in vals) + "\n")


def write_section_csv(rows, fname):
    """Stroboscopic section: k,t,x,xdot (or k,t,x,y for 2-D quantum models)."""
    with open(fname, "w") as fh:
        fh.write("k,t,x,xdot\n")
        for k, t, q in rows:
            fh.write(
                "%d,%s,%s\n"
                % (k, TRAJ_FLOAT_FMT % t,
                   ",".join(TRAJ_FLOAT_FMT % float(v) for v in q))
            )


def write_report_json(report, fname):
    with open(fname, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    raise TypeError(f"cannot serialize {type(obj).__name__}")


# ----------------------------------------------------------------- manifest

def file_sha256(fname):
    h = hashlib.sha256()
    with open(fname, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


@dataclass
class RunManifest:
    """Everything needed to reproduce a run and verify its outputs.

    Re-running with the recorded config and seed must reproduce every listed
    output byte for byte (wall times and the manifest itself excluded).
    """

    command: str
    config: dict
    seed: int = None
    workers: int = 1
    version: str = __version__
    started: float = None
    finished: float = None
    outputs: list = field(default_factory=list)  # [{"file": ..., "sha256": ...}]

    def start(self):
        self.started = time.time()
        return self

    def add_output(self, fname):
        # stored by basename: outputs live next to the manifest, so the
        # record stays valid when the run directory moves
        self.outputs.append(
            {"file": os.path.basename(str(fname)), "sha256": file_sha256(fname)}
        )

    def finish(self, fname):
        self.finished = time.time()
        payload = {
            "command": self.command,
            "config": self.config,
            "seed": self.seed,
            "workers": self.workers,
            "version": self.version,
            "started": self.started,
            "finished": self.finished,
            "wall_time_s": (
                None if self.started is None else self.finished - self.started
            ),
            "outputs": self.outputs,
        }
        with open(fname, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return fname

    @classmethod
    def load(cls, fname):
        with open(fname) as fh:
            payload = json.load(fh)
        m = cls(
            command=payload["command"],
            config=payload["config"],
            seed=payload.get("seed"),
            workers=payload.get("workers", 1),
            version=payload.get("version", "unknown"),
        )
        m.started = payload.get("started")
        m.finished = payload.get("finished")
        m.outputs = payload.get("outputs", [])
        return m

    def verify_outputs(self, expected):
        """Compare recorded hashes against another manifest's (replay check).

        Returns a list of mismatch descriptions, empty when byte-identical.
        """
        mine = {o["file"]: o["sha256"] for o in self.outputs}
        theirs = {o["file"]: o["sha256"] for o in expected.outputs}
        problems = []
        for name, want in theirs.items():
            have = mine.get(name)
            if have is None:
                problems.append(f"missing output {name}")
            elif have != want:
                problems.append(f"{name}: sha256 {have[:12]} != {want[:12]}")
        return problems
