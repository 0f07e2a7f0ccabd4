"""Statistics over trajectories: Born sampling, ensembles, histograms.

The reproducibility contract is enforced structurally:

* every random draw i of a run uses its own counter-based stream
  (numpy Philox keyed by (master_seed, i)), so draw i never depends on how
  many proposals draw j consumed;
* integration is RNG-free;
* histograms accumulate integer counts, and partial grids merge by
  addition.

Together these make every ensemble result bit-identical across worker
counts and execution orders.
"""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .dynamics import (
    IntegratorConfig,
    LCNSeries,
    classify_trajectory,
    integrate_trajectory,
    integrate_with_deviation,
)
from .errors import (
    ConfigError,
    CoverageError,
    EnsembleFailureError,
    EnvelopeError,
    GeometryMismatchError,
    InsufficientSpanError,
    NumericalError,
    SingularityError,
    StepLimitError,
)

DEFAULT_GRID_BOUNDS = (-8.0, 8.0, -8.0, 8.0)
DEFAULT_GRID_CELLS = 360
ENVELOPE_SCAN = 200
ENVELOPE_MARGIN = 1.2
MIN_ACCEPT_RATE = 0.01
MAX_FAILURE_FRACTION = 0.05


# -------------------------------------------------------------- histograms

@dataclass
class HistogramGrid:
    """Integer occupancy counts on a rectangular grid.

    Out-of-bounds points land in the overflow tally, never silently dropped.
    """

    bounds: tuple = DEFAULT_GRID_BOUNDS
    nx: int = DEFAULT_GRID_CELLS
    ny: int = DEFAULT_GRID_CELLS
    counts: np.ndarray = None
    overflow: int = 0

    def __post_init__(self):
        if self.counts is None:
            self.counts = np.zeros((self.nx, self.ny), dtype=np.int64)
        if self.counts.shape != (self.nx, self.ny):
            raise ConfigError("histogram count array does not match nx, ny")

    @property
    def total(self):
        return int(self.counts.sum())

    def geometry(self):
        return (tuple(float(b) for b in self.bounds), self.nx, self.ny)

    def cell_area(self):
        xmin, xmax, ymin, ymax = self.bounds
        return (xmax - xmin) / self.nx * (ymax - ymin) / self.ny

    def centers(self):
        xmin, xmax, ymin, ymax = self.bounds
        xs = xmin + (np.arange(self.nx) + 0.5) * (xmax - xmin) / self.nx
        ys = ymin + (np.arange(self.ny) + 0.5) * (ymax - ymin) / self.ny
        return xs, ys

    def accumulate(self, points):
        """Count an (n, 2) array of points into the grid."""
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[None, :]
        xmin, xmax, ymin, ymax = self.bounds
        ix = np.floor((pts[:, 0] - xmin) / (xmax - xmin) * self.nx).astype(np.int64)
        iy = np.floor((pts[:, 1] - ymin) / (ymax - ymin) * self.ny).astype(np.int64)
        ok = (ix >= 0) & (ix < self.nx) & (iy >= 0) & (iy < self.ny)
        np.add.at(self.counts, (ix[ok], iy[ok]), 1)
        self.overflow += int((~ok).sum())

    def merge(self, other):
        if self.geometry() != other.geometry():
            raise GeometryMismatchError("cannot merge grids of different geometry")
        self.counts += other.counts
        self.overflow += other.overflow

    def masses(self):
        tot = self.total
        if tot == 0:
            return np.zeros_like(self.counts, dtype=float)
        return self.counts / tot

    def support_fraction(self):
        return float((self.counts > 0).sum()) / (self.nx * self.ny)


@dataclass
class DensityGrid:
    """Expected (non-sampled) cell masses on the same geometry as a histogram."""

    bounds: tuple
    nx: int
    ny: int
    mass: np.ndarray

    def geometry(self):
        return (tuple(float(b) for b in self.bounds), self.nx, self.ny)

    def masses(self):
        return self.mass

    def rebin(self, factor):
        """Sum factor x factor blocks into a coarser grid."""
        if self.nx % factor or self.ny % factor:
            raise ConfigError("rebin factor must divide the grid size")
        m = self.mass.reshape(self.nx // factor, factor, self.ny // factor, factor)
        return DensityGrid(
            bounds=self.bounds, nx=self.nx // factor, ny=self.ny // factor,
            mass=m.sum(axis=(1, 3)),
        )


def density_histogram(model, t, bounds=DEFAULT_GRID_BOUNDS,
                      nx=DEFAULT_GRID_CELLS, ny=None,
                      coverage_tol=1e-6):
    """|Psi(., t)|^2 integrated cell-by-cell (midpoint rule), renormalized.

    Raises CoverageError when the grid misses more than `coverage_tol` of the
    total mass, which would silently bias every comparison made with it.
    """
    ny = nx if ny is None else ny
    grid = HistogramGrid(bounds=bounds, nx=nx, ny=ny)
    xs, ys = grid.centers()
    dens = model.density_grid(xs, ys, t)
    mass = dens * grid.cell_area()
    covered = float(mass.sum())
    if abs(1.0 - covered) > coverage_tol:
        raise CoverageError(
            f"grid {bounds} captures {covered:.8f} of the mass "
            f"(missing {abs(1 - covered):.2e} > {coverage_tol:g})"
        )
    return DensityGrid(bounds=bounds, nx=nx, ny=ny, mass=mass / covered)


def l1_distance(h1, h2):
    """Sum of |p_i - q_i| over normalized cell masses; 0 (equal) to 2 (disjoint)."""
    if h1.geometry() != h2.geometry():
        raise GeometryMismatchError(
            f"grid geometries differ: {h1.geometry()} vs {h2.geometry()}"
        )
    return float(np.abs(h1.masses() - h2.masses()).sum())


# ------------------------------------------------------------ Born sampling

def _draw_rng(master_seed, index):
    """The per-draw stream: Philox keyed by (master_seed, index).

    This pairing is part of the on-disk reproducibility contract (manifests
    record only the master seed), so it must stay stable.
    """
    return np.random.Generator(np.random.Philox(key=(int(master_seed), int(index))))


class _QubitProposal:
    """Two-Gaussian mixture matched to the qubit blob structure at time t0.

    The coherent-state blob centers rotate as cos(w t - s) while the widths
    stay fixed, so the proposal follows them exactly at any sampling time.
    """

    def __init__(self, model, t0=0.0):
        c1 = float(model.c1)
        c2 = float(model.c2)
        a0 = float(model.a0)
        wx = float(model.wx)
        wy = float(model.wy)
        self.w1 = c1 * c1 / (c1 * c1 + c2 * c2)
        cx = math.sqrt(2.0) * a0 / math.sqrt(wx) * math.cos(wx * t0 - float(model.sx))
        cy = math.sqrt(2.0) * a0 / math.sqrt(wy) * math.cos(wy * t0 - float(model.sy))
        self.centers = ((cx, -cy), (-cx, cy))
        self.stds = (1.0 / math.sqrt(2 * wx), 1.0 / math.sqrt(2 * wy))

    def sample(self, rng):
        cx, cy = self.centers[0] if rng.random() < self.w1 else self.centers[1]
        return (
            cx + self.stds[0] * rng.standard_normal(),
            cy + self.stds[1] * rng.standard_normal(),
        )

    def pdf(self, x, y):
        sx, sy = self.stds
        out = 0.0
        for w, (cx, cy) in zip((self.w1, 1.0 - self.w1), self.centers):
            out += (
                w
                * math.exp(-0.5 * ((x - cx) / sx) ** 2 - 0.5 * ((y - cy) / sy) ** 2)
                / (2 * math.pi * sx * sy)
            )
        return out


class _UniformProposal:
    def __init__(self, box):
        self.box = tuple(float(b) for b in box)
        xmin, xmax, ymin, ymax = self.box
        if xmax <= xmin or ymax <= ymin:
            raise ConfigError(f"degenerate proposal box {box}")
        self.area = (xmax - xmin) * (ymax - ymin)

    def sample(self, rng):
        xmin, xmax, ymin, ymax = self.box
        return (
            xmin + (xmax - xmin) * rng.random(),
            ymin + (ymax - ymin) * rng.random(),
        )

    def pdf(self, x, y):
        xmin, xmax, ymin, ymax = self.box
        if xmin <= x <= xmax and ymin <= y <= ymax:
            return 1.0 / self.area
        return 0.0


def _envelope_constant(model, t0, proposal, box, scan=ENVELOPE_SCAN):
    """max target/proposal over a scan grid, inflated by a safety margin."""
    xs = np.linspace(box[0], box[1], scan)
    ys = np.linspace(box[2], box[3], scan)
    dens = model.density_grid(xs, ys, t0)
    prop = np.array([[proposal.pdf(x, y) for y in ys] for x in xs])
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(prop > 0, dens / prop, 0.0)
    m = float(np.max(ratio))
    if not math.isfinite(m) or m <= 0:
        raise EnvelopeError("could not build a rejection envelope on the scan grid")
    return ENVELOPE_MARGIN * m


def sample_born(model, t0, n, seed, box=None, max_proposals_per_draw=100_000):
    """n positions distributed as |Psi(., t0)|^2, by rejection sampling.

    The qubit family gets a blob-matched Gaussian-mixture proposal; everything
    else uses a uniform proposal over `box`.  Draw i consumes only the Philox
    stream keyed (seed, i), so the returned list is independent of batching.
    """
    from .wavefunctions import QubitModel

    if n < 1:
        raise ConfigError("sample count must be at least 1")
    box = tuple(box) if box is not None else DEFAULT_GRID_BOUNDS
    if isinstance(model, QubitModel):
        proposal = _QubitProposal(model, t0)
    else:
        proposal = _UniformProposal(box)
    env = _envelope_constant(model, t0, proposal, box)
    out = []
    proposals = 0
    for i in range(n):
        rng = _draw_rng(seed, i)
        for _ in range(max_proposals_per_draw):
            proposals += 1
            x, y = proposal.sample(rng)
            p = proposal.pdf(x, y)
            if p <= 0.0:
                continue
            target = math.exp(model.log_density((x, y), t0))
            if target > env * p * (1 + 1e-12):
                raise EnvelopeError(
                    f"envelope violated at ({x:.3f}, {y:.3f}): "
                    f"target {target:.3e} > {env * p:.3e}"
                )
            if rng.random() * env * p < target:
                out.append((x, y))
                break
        else:
            raise EnvelopeError(
                f"draw {i} exhausted {max_proposals_per_draw} proposals"
            )
    if n / proposals < MIN_ACCEPT_RATE:
        raise EnvelopeError(
            f"acceptance rate {n / proposals:.4f} below {MIN_ACCEPT_RATE}; "
            "the proposal does not match the target (check the box)"
        )
    return out


# ----------------------------------------------------------------- ensembles

@dataclass
class EnsembleSpec:
    n: int = 250
    sampler: str = "born"  # born | uniform | explicit
    t0: float = 0.0
    t_max: float = 1000.0
    dt: float = 0.05
    seed: int = 0
    box: tuple = None
    positions: list = None  # for sampler="explicit"
    accumulate: str = "path"  # path | endpoint
    with_lcn: bool = True

    def __post_init__(self):
        if self.n < 1:
            raise ConfigError("ensemble size must be at least 1")
        if self.sampler not in ("born", "uniform", "explicit"):
            raise ConfigError(f"unknown sampler {self.sampler!r}")
        if self.sampler == "explicit" and not self.positions:
            raise ConfigError("explicit sampler needs positions")
        if self.accumulate not in ("path", "endpoint"):
            raise ConfigError(f"unknown accumulate mode {self.accumulate!r}")


@dataclass
class TrajectorySummary:
    index: int
    q0: tuple
    q_final: tuple = None
    classification: str = None
    slope: float = None
    trailing_mean: float = None
    steps: int = 0
    error: str = None


def _initial_positions(model, spec):
    if spec.sampler == "explicit":
        return [tuple(float(v) for v in q) for q in spec.positions[: spec.n]]
    if spec.sampler == "born":
        return sample_born(model, spec.t0, spec.n, spec.seed, box=spec.box)
    box = tuple(spec.box) if spec.box is not None else DEFAULT_GRID_BOUNDS
    out = []
    for i in range(spec.n):
        rng = _draw_rng(spec.seed, i)
        out.append(
            (
                box[0] + (box[1] - box[0]) * rng.random(),
                box[2] + (box[3] - box[2]) * rng.random(),
            )
        )
    return out


def _run_slice(args):
    """Worker: integrate a contiguous index slice, return partial results."""
    (model, cfg, items, t0, t_max, dt, accumulate, with_lcn, bounds, nx, ny) = args
    grid = HistogramGrid(bounds=bounds, nx=nx, ny=ny)
    summaries = []
    for index, q0 in items:
        s = TrajectorySummary(index=index, q0=tuple(q0))
        try:
            if with_lcn:
                path, series = integrate_with_deviation(
                    model, q0, None, t0, t_max, cfg, dt=dt
                )
                try:
                    s.classification = classify_trajectory(series)
                    s.slope = series.slope
                    s.trailing_mean = series.trailing_mean
                except InsufficientSpanError:
                    s.classification = "undetermined"
            else:
                path = integrate_trajectory(model, q0, t0, t_max, cfg, dt=dt)
            s.q_final = tuple(float(v) for v in path.final_point())
            s.steps = path.stats.get("steps", 0)
            if accumulate == "endpoint":
                grid.accumulate(np.asarray(path.points)[-1:, :2])
            else:
                grid.accumulate(np.asarray(path.points)[:, :2])
        except (SingularityError, StepLimitError, NumericalError) as exc:
            s.error = f"{type(exc).__name__}: {exc}"
        summaries.append(s)
    return grid.counts, grid.overflow, summaries


def run_ensemble(model, spec, cfg=None, bounds=DEFAULT_GRID_BOUNDS,
                 nx=DEFAULT_GRID_CELLS, ny=None, workers=1):
    """Integrate an ensemble and accumulate sample points on a grid.

    Returns (HistogramGrid, list of TrajectorySummary).  Individual
    trajectory failures are recorded in the summaries; more than 5% failures
    aborts the run.  The result is bit-identical for any worker count: the
    initial conditions are drawn once up front, each worker accumulates an
    integer partial grid over a fixed index slice, and merging is addition.
    """
    cfg = cfg or IntegratorConfig()
    ny = nx if ny is None else ny
    ics = _initial_positions(model, spec)
    items = list(enumerate(ics))
    grid = HistogramGrid(bounds=bounds, nx=nx, ny=ny)
    all_summaries = []
    if workers <= 1:
        counts, overflow, summaries = _run_slice(
            (model, cfg, items, spec.t0, spec.t_max, spec.dt,
             spec.accumulate, spec.with_lcn, bounds, nx, ny)
        )
        grid.counts += counts
        grid.overflow += overflow
        all_summaries.extend(summaries)
    else:
        chunks = [items[i::workers] for i in range(workers)]
        payloads = [
            (model, cfg, chunk, spec.t0, spec.t_max, spec.dt,
             spec.accumulate, spec.with_lcn, bounds, nx, ny)
            for chunk in chunks if chunk
        ]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for counts, overflow, summaries in pool.map(_run_slice, payloads):
                grid.counts += counts
                grid.overflow += overflow
                all_summaries.extend(summaries)
    all_summaries.sort(key=lambda s: s.index)
    failures = [s for s in all_summaries if s.error is not None]
    if len(failures) > MAX_FAILURE_FRACTION * len(all_summaries):
        raise EnsembleFailureError(
            f"{len(failures)}/{len(all_summaries)} trajectories failed; "
            f"first: {failures[0].error}"
        )
    return grid, all_summaries


def single_trajectory_histogram(model, q0, t_max, cfg=None,
                                bounds=DEFAULT_GRID_BOUNDS,
                                nx=DEFAULT_GRID_CELLS, ny=None,
                                dt=0.05, with_lcn=False):
    """Occupancy histogram of one long trajectory (the ergodic-limit object)."""
    cfg = cfg or IntegratorConfig()
    ny = nx if ny is None else ny
    grid = HistogramGrid(bounds=bounds, nx=nx, ny=ny)
    if with_lcn:
        path, series = integrate_with_deviation(model, q0, None, 0.0, t_max, cfg, dt=dt)
    else:
        path = integrate_trajectory(model, q0, 0.0, t_max, cfg, dt=dt)
        series = None
    grid.accumulate(np.asarray(path.points)[:, :2])
    return grid, series


def ergodicity_test(model, q0, t_long, spec, cfg=None,
                    bounds=DEFAULT_GRID_BOUNDS, nx=90, ny=None,
                    workers=1, density_times=64):
    """Compare one long chaotic run against a Born-distributed ensemble.

    Report keys: D_single_vs_ensemble (the gated quantity) and D_vs_density
    (single run against the time-averaged expected density over the same
    span).  The single trajectory's LCN classification is included as
    context; ergodicity is only meaningful for a chaotic IC.
    """
    cfg = cfg or IntegratorConfig()
    ny = nx if ny is None else ny
    single, series = single_trajectory_histogram(
        model, q0, t_long, cfg, bounds=bounds, nx=nx, ny=ny, with_lcn=True
    )
    try:
        classification = classify_trajectory(series)
    except InsufficientSpanError:
        classification = "undetermined"
    ens_grid, summaries = run_ensemble(
        model, spec, cfg, bounds=bounds, nx=nx, ny=ny, workers=workers
    )
    avg = None
    for t in np.linspace(0.0, t_long, density_times):
        d = density_histogram(model, float(t), bounds=bounds, nx=nx, ny=ny)
        avg = d.mass if avg is None else avg + d.mass
    avg_grid = DensityGrid(bounds=bounds, nx=nx, ny=ny, mass=avg / density_times)
    return {
        "D_single_vs_ensemble": l1_distance(single, ens_grid),
        "D_vs_density": l1_distance(single, avg_grid),
        "single_classification": classification,
        "ensemble_classifications": {
            c: sum(1 for s in summaries if s.classification == c)
            for c in ("ordered", "chaotic", "undetermined", None)
        },
    }


# ------------------------------------------------- sections and invariants

def stroboscopic_section(model, q0, omega, k_count, cfg=None):
    """State at the drive-phase times t = 2 pi k / omega, k = 1..k_count.

    The integrator lands on each section time exactly (no interpolation), so
    the section inherits the trajectory's reproducibility.
    """
    if k_count < 1:
        raise ConfigError("need at least one section point")
    cfg = cfg or IntegratorConfig()
    period = 2 * math.pi / float(omega)
    path = integrate_trajectory(model, q0, 0.0, k_count * period, cfg, dt=period)
    pts = np.asarray(path.points)
    return [(int(k), float(k * period), tuple(pts[k])) for k in range(1, k_count + 1)]


@dataclass
class IntegralSurfaceSpec:
    kind: str  # pear | open | circle-pair
    omega3: float = math.sqrt(3.0)

    def __post_init__(self):
        if self.kind not in ("pear", "open", "circle-pair"):
            raise ConfigError(f"unknown surface kind {self.kind!r}")

    def values(self, q):
        """The conserved quantities at a point (tuple, one entry per integral)."""
        x, y, z = (float(v) for v in q)
        if self.kind == "circle-pair":
            return (x * x + z * z, y)
        if z <= 0:
            raise NumericalError(
                f"surface invariant needs z > 0, got z={z} (log term)"
            )
        r = 0.5 * z * z - math.log(z) / (2 * self.omega3)
        if self.kind == "pear":
            return (x * x + y * y + r,)
        return (-x * x + y * y + r,)


def surface_residual(path, spec):
    """Peak relative drift of the conserved quantity along a path."""
    pts = np.asarray([[float(v) for v in p] for p in path.points])
    base = spec.values(pts[0])
    worst = 0.0
    for row in pts[1:]:
        vals = spec.values(row)
        for v, b in zip(vals, base):
            if b == 0:
                raise NumericalError("conserved quantity is zero at t=0")
            worst = max(worst, abs(v - b) / abs(b))
    return worst


def box_counting_dimension(points, n_scales=6, min_count=2):
    """Box-counting estimate of a 2-D point set's dimension.

    Rescales the set to the unit square and fits log N(eps) against
    log(1/eps) over dyadic scales 2^-1 .. 2^-n_scales.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < min_count:
        raise ConfigError("need an (n, 2) point set")
    lo = pts.min(axis=0)
    span = pts.max(axis=0) - lo
    span[span == 0] = 1.0
    unit = (pts - lo) / span
    logs = []
    for k in range(1, n_scales + 1):
        n = 2**k
        ix = np.minimum((unit[:, 0] * n).astype(int), n - 1)
        iy = np.minimum((unit[:, 1] * n).astype(int), n - 1)
        occupied = len(set(zip(ix.tolist(), iy.tolist())))
        logs.append((math.log(n), math.log(occupied)))
    arr = np.asarray(logs)
    slope = np.polyfit(arr[:, 0], arr[:, 1], 1)[0]
    return float(slope)
