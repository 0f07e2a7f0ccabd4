"""Compiled-kernel vs pure-Python integrator comparison.

Runs the same trajectory through both code paths for each model family,
reports wall time, steps taken, speedup, and the worst coordinate
disagreement on the shared sample grid.  The two paths follow the same
stepping logic; step counts may differ by a handful when the adaptive
controller sits on an accept/reject boundary and the two arithmetic
orderings round differently.

Usage: python benchmarks/bench_backends.py [--t-end T] [--families a,b,...]
"""

import argparse
import time

import numpy as np

from bohmsim import presets, uses_compiled_kernels
from bohmsim.dynamics import IntegratorConfig, integrate_with_deviation

FAMILIES = {
    "system_a": (presets.system_a, presets.SYSTEM_A_ICS["chaotic"]),
    "qubit": (presets.qubit, presets.QUBIT_ICS["ergodic"]),
    "pear_3d": (presets.pear_3d, presets.PEAR_ICS["surface"]),
    "classical": (presets.classical_driven, presets.CLASSICAL_IC),
}


def run_one(model, q0, t_end, use_compiled):
    cfg = IntegratorConfig(use_compiled=use_compiled)
    start = time.perf_counter()
    path, series = integrate_with_deviation(model, q0, None, 0.0, t_end, cfg,
                                            dt=1.0)
    wall = time.perf_counter() - start
    return path, wall


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--t-end", type=float, default=200.0)
    ap.add_argument("--families", default=",".join(FAMILIES))
    args = ap.parse_args()

    if not uses_compiled_kernels:
        print("compiled kernels not available; nothing to compare")
        return 1

    print(f"t_end = {args.t_end:g}, LCN co-integration on")
    header = f"{'family':<12} {'pure [s]':>9} {'compiled [s]':>13} " \
             f"{'speedup':>8} {'steps':>12} {'max |dq|':>10}"
    print(header)
    print("-" * len(header))
    for name in args.families.split(","):
        factory, q0 = FAMILIES[name]
        model = factory()
        path_c, wall_c = run_one(model, q0, args.t_end, True)
        path_p, wall_p = run_one(model, q0, args.t_end, False)
        nc, npure = path_c.stats["steps"], path_p.stats["steps"]
        steps = str(nc) if nc == npure else f"{nc}/{npure}"
        dq = np.max(np.abs(np.asarray(path_c.points, dtype=float)
                           - np.asarray(path_p.points, dtype=float)))
        print(f"{name:<12} {wall_p:9.3f} {wall_c:13.4f} "
              f"{wall_p / wall_c:7.1f}x {steps:>12} {dq:10.2e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
