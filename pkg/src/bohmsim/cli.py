"""Command-line interface.

One subcommand per experiment class; every run resolves its full
configuration (config file plus flag overrides), executes, writes CSV/JSON
outputs, and drops a RunManifest next to them.  `--replay manifest.json`
re-executes the recorded configuration and verifies the fresh outputs hash
byte-identical to the recorded ones.

Exit codes: 0 success, 1 configuration error, 2 numerical failure.
"""

import argparse
import math
import os
import re
import sys

from . import __version__, analysis, io, npxpc, presets
from .classical import classical_lcn
from .config import build_integrator_config, build_model, load_config
from .dynamics import (
    classify_trajectory,
    integrate_trajectory,
    integrate_with_deviation,
)
from .errors import BohmsimError, ConfigError, NumericalError

# tokens like -1,-1 or -0.5,2,3 are vector values, not option strings
_VECTOR_TOKEN = re.compile(r"^-[\d.eE+-]+(,[\d.eE+-]+)*$")


class _Parser(argparse.ArgumentParser):
    """argparse that exits 1 on bad usage and accepts -x,-y vector values."""

    def __init__(self, *a, **kw):
        super().__init__(*a, **kw)
        self._negative_number_matcher = _VECTOR_TOKEN

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _vector(text):
    try:
        return tuple(float(p) for p in text.split(","))
    except ValueError:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from None


def _build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--seed", type=int, help="master RNG seed")
    common.add_argument("--workers", type=int, help="parallel worker bound")
    common.add_argument("--precision", type=int, metavar="DIGITS",
                        help="significant digits (>16 switches to extended precision)")
    common.add_argument("--out", help="output directory (default $BOHMSIM_OUT or .)")
    common.add_argument("--full-scale", action="store_true",
                        help="long production horizons instead of desk scale")
    common.add_argument("--replay", metavar="MANIFEST",
                        help="re-run a recorded manifest and verify byte identity")
    top = _Parser(prog="bohmsim", description=__doc__.splitlines()[0],
                  parents=[common])
    top.add_argument("--version", action="version", version=__version__)
    sub = top.add_subparsers(dest="command")

    def cmd(name, help_text):
        p = sub.add_parser(name, parents=[common], help=help_text)
        p._negative_number_matcher = _VECTOR_TOKEN
        return p

    p = cmd("traj", "integrate one trajectory")
    p.add_argument("--ic", help="initial position x,y[,z]")
    p.add_argument("--t-end", type=float)
    p.add_argument("--dt", type=float, default=0.05)

    p = cmd("lcn", "trajectory plus finite-time LCN classification")
    p.add_argument("--ic", help="initial position x,y[,z]")
    p.add_argument("--t-end", type=float)
    p.add_argument("--dt", type=float, default=1.0)

    p = cmd("nodal", "nodal-point track over a time range")
    p.add_argument("--t-start", type=float, default=0.1)
    p.add_argument("--t-stop", type=float, default=3.0)
    p.add_argument("--t-step", type=float, default=0.1)
    p.add_argument("--k-max", type=int, default=9)

    p = cmd("xpoint", "frozen-frame X-point and asymptotic curves at one time")
    p.add_argument("--time", type=float, required=False)
    p.add_argument("--branch", type=int, default=0)
    p.add_argument("--arc-length", type=float, default=6.0)

    p = cmd("hopf", "scan nodal-point stability for attractor/repellor flips")
    p.add_argument("--t-start", type=float, default=0.5)
    p.add_argument("--t-stop", type=float, default=3.0)
    p.add_argument("--t-step", type=float, default=0.05)

    p = cmd("ensemble", "integrate an ensemble onto a histogram grid")
    p.add_argument("--n", type=int)
    p.add_argument("--t-end", type=float)
    p.add_argument("--dt", type=float, default=0.05)
    p.add_argument("--sampler", choices=("born", "uniform", "explicit"))
    p.add_argument("--grid", type=int, help="cells per axis")
    p.add_argument("--endpoint", action="store_true",
                   help="histogram only the final points")
    p.add_argument("--single", help="histogram one long trajectory from x,y instead")

    p = cmd("born-sample", "draw positions from |Psi(., t0)|^2")
    p.add_argument("--n", type=int)
    p.add_argument("--t0", type=float, default=0.0)

    p = cmd("poincare", "stroboscopic section at the drive period")
    p.add_argument("--ic", help="initial state x,xdot")
    p.add_argument("--count", type=int, default=1000)

    p = cmd("surface", "conserved-quantity drift along a 3-D trajectory")
    p.add_argument("--kind", choices=("pear", "open", "circle-pair"))
    p.add_argument("--ic", help="initial position x,y,z")
    p.add_argument("--t-end", type=float, default=200.0)

    p = cmd("classical", "driven-oscillator LCN baseline")
    p.add_argument("--ic", help="initial state x,xdot")
    p.add_argument("--t-end", type=float, default=1e4)

    p = cmd("nodal-line-3d", "trace a nodal line of a 3-D model at frozen time")
    p.add_argument("--time", type=float, default=1.0)
    p.add_argument("--seed-point", help="starting guess x,y,z")
    p.add_argument("--arc-length", type=float, default=6.0)
    return top


# ----------------------------------------------------------- configuration

def _resolve(args):
    """Full run configuration from file plus flag overrides."""
    cfg = {"model": {}, "integrator": {}, "run": {}, "experiment": {}}
    if args.config:
        loaded = load_config(args.config)
        for key in ("model", "integrator", "run"):
            cfg[key].update(loaded.get(key, {}))
    run = cfg["run"]
    if args.seed is not None:
        run["seed"] = args.seed
    if args.workers is not None:
        run["workers"] = args.workers
    if args.precision is not None:
        cfg["integrator"]["digits"] = args.precision
    if args.full_scale:
        run["full_scale"] = True
    run.setdefault("seed", 0)
    run.setdefault("workers", 1)
    run.setdefault("full_scale", False)
    return cfg


def _default_model(cfg, fallback="system_a"):
    if not cfg["model"]:
        cfg["model"] = {"preset": fallback}
    return build_model(cfg["model"])


def _exp(cfg, args, names, defaults=()):
    """Copy experiment parameters from flags into the config, with defaults."""
    exp = cfg["experiment"]
    for name in names:
        val = getattr(args, name.replace("-", "_"), None)
        if val is not None:
            exp[name] = val
    for name, val in defaults:
        exp.setdefault(name, val)
    return exp


# ------------------------------------------------------------- subcommands

def _run_traj(cfg, out):
    model = _default_model(cfg)
    icfg = build_integrator_config(cfg["integrator"])
    e = cfg["experiment"]
    q0 = tuple(e["ic"])
    path = integrate_trajectory(model, q0, 0.0, e["t_end"], icfg, dt=e["dt"])
    fname = os.path.join(out, "traj.csv")
    digits = icfg.digits if icfg.digits and icfg.digits > 16 else None
    io.write_trajectory_csv(path, fname, digits=digits)
    return [fname]


def _run_lcn(cfg, out):
    model = _default_model(cfg)
    icfg = build_integrator_config(cfg["integrator"])
    e = cfg["experiment"]
    path, series = integrate_with_deviation(
        model, tuple(e["ic"]), None, 0.0, e["t_end"], icfg, dt=e["dt"]
    )
    classification = classify_trajectory(series)
    traj = os.path.join(out, "lcn.csv")
    digits = icfg.digits if icfg.digits and icfg.digits > 16 else None
    io.write_trajectory_csv(path, traj, digits=digits)
    report = os.path.join(out, "lcn.json")
    io.write_report_json(
        {
            "classification": classification,
            "slope": series.slope,
            "trailing_mean": series.trailing_mean,
            "steps": path.stats.get("steps"),
        },
        report,
    )
    return [traj, report]


def _run_nodal(cfg, out):
    model = _default_model(cfg)
    e = cfg["experiment"]
    records = []
    t = e["t_start"]
    while t <= e["t_stop"] + 1e-12:
        for rec in npxpc.nodal_points(model, t, k_max=e["k_max"]):
            if not rec.at_infinity:
                npxpc.classify_nodal_point(model, t, rec)
            records.append(rec)
        t += e["t_step"]
    fname = os.path.join(out, "nodes.csv")
    io.write_node_track_csv(records, fname)
    return [fname]


def _run_xpoint(cfg, out):
    model = _default_model(cfg)
    e = cfg["experiment"]
    t = e["time"]
    recs = [r for r in npxpc.nodal_points(model, t) if not r.at_infinity]
    if not recs:
        raise NumericalError(f"no finite nodal point at t={t}")
    rec = recs[min(e["branch"], len(recs) - 1)]
    npxpc.classify_nodal_point(model, t, rec)
    xrec = npxpc.find_x_point(model, t, rec)
    branches = npxpc.trace_asymptotic_curves(
        model, t, rec, xrec, arc_length=e["arc_length"]
    )
    curves = os.path.join(out, "curves.csv")
    io.write_polylines_csv(branches, curves)
    report = os.path.join(out, "xpoint.json")
    io.write_report_json(
        {
            "t": t,
            "node": list(rec.position),
            "node_class": rec.label,
            "x_offset": list(xrec.offset),
            "x_position": list(xrec.position),
            "eigenvalues": list(xrec.eigenvalues),
            "branches": {
                b.name: {"termination": b.termination,
                         "final_node_distance": b.final_node_distance}
                for b in branches
            },
        },
        report,
    )
    return [curves, report]


def _run_hopf(cfg, out):
    model = _default_model(cfg)
    e = cfg["experiment"]
    transitions = npxpc.hopf_scan(model, e["t_start"], e["t_stop"],
                                  step=e["t_step"])
    entries = []
    for t in transitions:
        entry = {"t": t}
        for side, dt_off in (("before", -e["t_step"]), ("after", e["t_step"])):
            try:
                recs = [r for r in npxpc.nodal_points(model, t + dt_off)
                        if not r.at_infinity]
                npxpc.classify_nodal_point(model, t + dt_off, recs[0])
                entry[side] = recs[0].label
            except (IndexError, BohmsimError):
                entry[side] = None
        entries.append(entry)
    fname = os.path.join(out, "hopf.json")
    io.write_report_json(
        {"t_start": e["t_start"], "t_stop": e["t_stop"],
         "transitions": entries},
        fname,
    )
    return [fname]


def _run_ensemble(cfg, out):
    model = _default_model(cfg, fallback="qubit_max")
    icfg = build_integrator_config(cfg["integrator"])
    run = cfg["run"]
    e = cfg["experiment"]
    nx = e.get("grid") or (360 if run["full_scale"] else 90)
    hist = os.path.join(out, "histogram.csv")
    report = os.path.join(out, "ensemble.json")
    if e.get("single"):
        t_end = e.get("t_end") or (2.5e5 if run["full_scale"] else 5e4)
        grid, series = analysis.single_trajectory_histogram(
            model, tuple(e["single"]), t_end, icfg, nx=nx, dt=e["dt"],
            with_lcn=True,
        )
        classification = classify_trajectory(series)
        summary = {"mode": "single", "t_end": t_end,
                   "classification": classification,
                   "support_fraction": grid.support_fraction()}
    else:
        spec = analysis.EnsembleSpec(
            n=e.get("n") or 250,
            sampler=e.get("sampler") or "born",
            t_max=e.get("t_end") or 1000.0,
            dt=e["dt"],
            seed=run["seed"],
            accumulate="endpoint" if e.get("endpoint") else "path",
            with_lcn=False,
        )
        grid, summaries = analysis.run_ensemble(
            model, spec, icfg, nx=nx, workers=run["workers"]
        )
        failures = [s.index for s in summaries if s.error]
        summary = {"mode": "ensemble", "n": spec.n, "t_end": spec.t_max,
                   "sampler": spec.sampler, "failures": failures,
                   "support_fraction": grid.support_fraction()}
    io.write_histogram_csv(grid, hist)
    summary.update({"grid": nx, "overflow": grid.overflow, "total": grid.total,
                    "seed": run["seed"]})
    io.write_report_json(summary, report)
    return [hist, report]


def _run_born_sample(cfg, out):
    model = _default_model(cfg, fallback="qubit_max")
    run = cfg["run"]
    e = cfg["experiment"]
    pts = analysis.sample_born(model, e["t0"], e.get("n") or 1000, run["seed"])
    fname = os.path.join(out, "samples.csv")
    with open(fname, "w") as fh:
        fh.write("x,y\n")
        for x, y in pts:
            fh.write("%.17g,%.17g\n" % (x, y))
    return [fname]


def _run_poincare(cfg, out):
    model = _default_model(cfg, fallback="classical")
    icfg = build_integrator_config(cfg["integrator"])
    e = cfg["experiment"]
    omega = float(model.spec.omega) if hasattr(model, "spec") else 1.0
    rows = analysis.stroboscopic_section(
        model, tuple(e.get("ic") or presets.CLASSICAL_IC), omega,
        e["count"], icfg,
    )
    fname = os.path.join(out, "section.csv")
    io.write_section_csv(rows, fname)
    return [fname]


def _run_surface(cfg, out):
    model = _default_model(cfg, fallback="pear_3d")
    icfg = build_integrator_config(cfg["integrator"])
    e = cfg["experiment"]
    kind = e.get("kind") or "pear"
    ic = tuple(e.get("ic") or presets.PEAR_ICS["surface"])
    sspec = analysis.IntegralSurfaceSpec(kind=kind)
    path = integrate_trajectory(model, ic, 0.0, e["t_end"], icfg, dt=0.05)
    drift = analysis.surface_residual(path, sspec)
    fname = os.path.join(out, "surface.json")
    io.write_report_json(
        {"kind": kind, "ic": list(ic), "t_end": e["t_end"], "drift": drift},
        fname,
    )
    return [fname]


def _run_classical(cfg, out):
    model = _default_model(cfg, fallback="classical")
    icfg = build_integrator_config(cfg["integrator"])
    e = cfg["experiment"]
    ic = tuple(e.get("ic") or presets.CLASSICAL_IC)
    path, series = classical_lcn(model.spec, ic, e["t_end"], icfg, dt=1.0)
    classification = classify_trajectory(series)
    fname = os.path.join(out, "classical.json")
    io.write_report_json(
        {
            "ic": list(ic),
            "t_end": e["t_end"],
            "classification": classification,
            "slope": series.slope,
            "trailing_mean": series.trailing_mean,
        },
        fname,
    )
    return [fname]


def _run_nodal_line(cfg, out):
    model = _default_model(cfg, fallback="pear_3d")
    e = cfg["experiment"]
    seed = tuple(e.get("seed_point") or
                 (presets.PEAR_EQUATOR_R / math.sqrt(2),
                  -presets.PEAR_EQUATOR_R / math.sqrt(2),
                  presets.PEAR_NODE_Z))
    line = npxpc.trace_nodal_line_3d(model, e["time"], seed,
                                     arc_length=e["arc_length"])
    fname = os.path.join(out, "nodal_line.csv")
    io.write_nodal_line_csv(line, fname)
    return [fname]


_HANDLERS = {
    "traj": (_run_traj, ("ic", "t-end", "dt"), ()),
    "lcn": (_run_lcn, ("ic", "t-end", "dt"), ()),
    "nodal": (_run_nodal, ("t-start", "t-stop", "t-step", "k-max"), ()),
    "xpoint": (_run_xpoint, ("time", "branch", "arc-length"),
               (("time", 1.27),)),
    "hopf": (_run_hopf, ("t-start", "t-stop", "t-step"), ()),
    "ensemble": (_run_ensemble,
                 ("n", "t-end", "dt", "sampler", "grid", "endpoint", "single"),
                 ()),
    "born-sample": (_run_born_sample, ("n", "t0"), ()),
    "poincare": (_run_poincare, ("ic", "count"), ()),
    "surface": (_run_surface, ("kind", "ic", "t-end"), ()),
    "classical": (_run_classical, ("ic", "t-end"), ()),
    "nodal-line-3d": (_run_nodal_line, ("time", "seed-point", "arc-length"),
                      ()),
}
_VECTOR_FIELDS = ("ic", "single", "seed_point")


def _normalize_experiment(exp):
    for key in _VECTOR_FIELDS:
        k = key.replace("_", "-")
        for name in (key, k):
            if isinstance(exp.get(name), str):
                exp[name] = list(_vector(exp[name]))
    # argparse uses underscores, configs use either; canonicalize to underscore
    for name in list(exp):
        if "-" in name:
            exp[name.replace("-", "_")] = exp.pop(name)
    return exp


def _execute(command, cfg, out):
    handler, _, _ = _HANDLERS[command]
    os.makedirs(out, exist_ok=True)
    manifest = io.RunManifest(
        command=command, config=cfg, seed=cfg["run"]["seed"],
        workers=cfg["run"]["workers"],
    ).start()
    files = handler(cfg, out)
    for f in files:
        manifest.add_output(f)
    manifest.finish(os.path.join(out, "manifest.json"))
    return manifest


def _replay(manifest_path, out):
    recorded = io.RunManifest.load(manifest_path)
    out = out or os.path.dirname(os.path.abspath(manifest_path))
    fresh = _execute(recorded.command, recorded.config, out)
    problems = fresh.verify_outputs(recorded)
    if problems:
        for p in problems:
            print(f"replay mismatch: {p}", file=sys.stderr)
        raise NumericalError(f"{len(problems)} outputs differ from the manifest")
    print(f"replay ok: {len(fresh.outputs)} outputs byte-identical")
    return fresh


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command is None and not args.replay:
        parser.print_usage(sys.stderr)
        return 1
    try:
        out = args.out or os.environ.get("BOHMSIM_OUT") or "."
        if args.replay:
            _replay(args.replay, args.out)
            return 0
        cfg = _resolve(args)
        handler, names, defaults = _HANDLERS[args.command]
        _exp(cfg, args, names, defaults)
        _normalize_experiment(cfg["experiment"])
        if args.command in ("traj", "lcn") and "t_end" not in cfg["experiment"]:
            raise ConfigError(f"{args.command}: --t-end is required")
        if args.command in ("traj", "lcn") and "ic" not in cfg["experiment"]:
            raise ConfigError(f"{args.command}: --ic is required")
        _execute(args.command, cfg, out)
        return 0
    except ConfigError as exc:
        print(f"bohmsim: config error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"bohmsim: numerical failure: {exc}", file=sys.stderr)
        return 2
    except BohmsimError as exc:
        print(f"bohmsim: {exc}", file=sys.stderr)
        return 1


def dispatch(argv):
    """Alias used by scripts that want the exit code without sys.exit."""
    return main(argv)


if __name__ == "__main__":
    sys.exit(main())
