"""Acceptance gate: one test per release criterion, with pinned tolerances.

Each test prints a single `[criterion N] PASS|FAIL ...` line carrying the
measured quantities, then asserts.  Criteria are independent; run with -v
to get one verdict line per criterion from pytest itself as well.
"""

import math

import numpy as np
import pytest

from bohmsim import IntegratorConfig, cli, closedforms as cf, npxpc, presets
from bohmsim.analysis import (
    EnsembleSpec,
    HistogramGrid,
    IntegralSurfaceSpec,
    density_histogram,
    l1_distance,
    run_ensemble,
    sample_born,
    single_trajectory_histogram,
    stroboscopic_section,
    surface_residual,
)
from bohmsim.backends import get_backend
from bohmsim.classical import (
    GOLDEN_FREQ,
    ClassicalOscillator,
    DrivenOscillatorSpec,
    classical_lcn,
)
from bohmsim.dynamics import (
    classify_trajectory,
    integrate_trajectory,
    integrate_with_deviation,
    rational_period,
)


def _verdict(n, ok, detail):
    print(f"[criterion {n}] {'PASS' if ok else 'FAIL'} {detail}")
    assert ok, f"criterion {n}: {detail}"


def test_criterion_01_order_chaos_dichotomy():
    cfg = IntegratorConfig()
    m = presets.system_a()
    _, s_ord = integrate_with_deviation(m, presets.SYSTEM_A_ICS["ordered"],
                                        None, 0.0, 1e4, cfg, dt=1.0)
    c_ord = classify_trajectory(s_ord)
    _, s_ch = integrate_with_deviation(m, presets.SYSTEM_A_ICS["chaotic"],
                                       None, 0.0, 1e5, cfg, dt=10.0)
    c_ch = classify_trajectory(s_ch)
    _, s_2x = integrate_with_deviation(m, presets.SYSTEM_A_ICS["chaotic"],
                                       None, 0.0, 2e5, cfg, dt=10.0)
    classify_trajectory(s_2x)  # populates the trailing mean
    rel = abs(s_2x.trailing_mean - s_ch.trailing_mean) / s_ch.trailing_mean
    ok = (c_ord == "ordered" and -1.2 < s_ord.slope < -0.8
          and c_ch == "chaotic" and s_ch.trailing_mean > 0.005 and rel < 0.3)
    _verdict(1, ok, f"(0.75,0.25) {c_ord} slope {s_ord.slope:.3f}; "
                    f"(-1,-1) {c_ch} chi {s_ch.trailing_mean:.4f}, "
                    f"doubled-horizon change {rel:.1%}")


def test_criterion_02_closed_form_velocities():
    rng = np.random.default_rng(314)
    worst = 0.0
    m = presets.system_a()
    for _ in range(100):
        x, y = rng.uniform(-3.0, 3.0, size=2)
        t = rng.uniform(0.05, 20.0)
        closed = cf.system_a_velocity(m, x, y, t)
        generic = m.velocity((x, y), t)
        num = math.hypot(closed[0] - generic[0], closed[1] - generic[1])
        worst = max(worst, num / max(math.hypot(*generic), 1e-12))
    qworst = 0.0
    qm = presets.qubit()
    for _ in range(100):
        x, y = rng.uniform(-4.0, 4.0, size=2)
        t = rng.uniform(0.05, 20.0)
        closed = cf.qubit_velocity(qm, x, y, t)
        generic = qm.velocity((x, y), t)
        num = math.hypot(closed[0] - generic[0], closed[1] - generic[1])
        qworst = max(qworst, num / max(math.hypot(*generic), 1e-12))
    ok = worst < 1e-10 and qworst < 1e-10
    _verdict(2, ok, f"closed vs generic velocity, worst relative error "
                    f"{worst:.2e} (2-D oscillator), {qworst:.2e} (qubit)")


def test_criterion_03_nodal_residuals_and_parity():
    rng = np.random.default_rng(2718)
    m = presets.system_a()
    worst = 0.0
    checked = 0
    while checked < 100:
        t = rng.uniform(0.05, 40.0)
        x, y, finite = cf.system_a_node(m, t)
        if not finite:
            continue
        worst = max(worst, abs(m.psi((x, y), t)))
        checked += 1
    qm = presets.qubit()
    qworst = 0.0
    parity_ok = True
    checked = 0
    while checked < 100:
        t = rng.uniform(0.2, 30.0)
        roots, at_inf = cf.qubit_nodes(qm, t, range(-9, 10))
        if at_inf:
            continue
        for k, x, y in roots:
            qworst = max(qworst, abs(qm.psi((x, y), t)))
            parity_ok = parity_ok and k % 2 == 1  # c1 c2 > 0 branch rule
        checked += len(roots)
    ok = worst < 1e-10 and qworst < 1e-10 and parity_ok
    _verdict(3, ok, f"|Psi| at closed-form nodes: {worst:.2e} (oscillator), "
                    f"{qworst:.2e} (qubit); odd-branch parity "
                    f"{'holds' if parity_ok else 'violated'}")


def test_criterion_04_xpoint_complex():
    m = presets.system_a()
    t = 1.27
    recs = [r for r in npxpc.nodal_points(m, t) if not r.at_infinity]
    assert recs
    rec = recs[0]
    npxpc.classify_nodal_point(m, t, rec)
    xrec = npxpc.find_x_point(m, t, rec)
    lam = np.asarray(xrec.eigenvalues)
    real_saddle = (np.abs(lam.imag).max() < 1e-6 * np.abs(lam.real).max()
                   and lam.real[0] * lam.real[1] < 0)
    branches = npxpc.trace_asymptotic_curves(m, t, rec, xrec, arc_length=6.0)
    spirals = []
    for b in branches:
        ang = np.unwrap(np.arctan2(b.frame_points[:, 1], b.frame_points[:, 0]))
        turns = abs(ang[-1] - ang[0]) / (2 * math.pi)
        if b.final_node_distance < 0.1 and turns > 3:
            spirals.append(b.name)
    ok = real_saddle and len(spirals) == 1
    _verdict(4, ok, f"t=1.27 X-point eigenvalues {lam.real[0]:.2f}/"
                    f"{lam.real[1]:.2f} (imag < 1e-6), spiral branches "
                    f"{spirals or 'none'}")


def test_criterion_05_hopf_transition():
    m = presets.system_a()
    transitions = npxpc.hopf_scan(m, 0.5, 3.0, step=0.05)
    flips = []
    for t in transitions:
        labels = []
        for t_side in (t - 0.05, t + 0.05):
            recs = [r for r in npxpc.nodal_points(m, t_side)
                    if not r.at_infinity]
            npxpc.classify_nodal_point(m, t_side, recs[0])
            labels.append(recs[0].label)
        flips.append((round(t, 4), labels[0], labels[1]))
    ok = any(a == "attractor" and b == "repellor" for _, a, b in flips)
    _verdict(5, ok, f"scan [0.5, 3.0] transitions {flips}")


def test_criterion_06_commensurable_return():
    m = presets.system_a_commensurable(3, 2)
    T = rational_period(3, 2, 1.0)  # both frequencies complete whole cycles
    worst = 0.0
    for ic in ((-1.0, -1.0), (0.75, 0.25)):
        path = integrate_trajectory(m, ic, 0.0, T, IntegratorConfig(), dt=T)
        q = np.asarray(path.final_point(), dtype=float)
        worst = max(worst, float(np.linalg.norm(q - np.asarray(ic))))
    ok = worst < 1e-8
    _verdict(6, ok, f"omega2=3/2 return distance at T=4pi: worst {worst:.2e}")


@pytest.mark.slow
def test_criterion_06_long_commensurable_return():
    # hours of wall time: 50-digit arithmetic over ~4247 time units
    bk = get_backend(50)
    m = presets.system_a_commensurable(629, 676, backend=bk)
    T = rational_period(629, 676, 1.0)
    cfg = IntegratorConfig(rtol=1e-15, atol=1e-17, digits=50)
    ic = (-1.0, -1.0)
    path = integrate_trajectory(m, ic, 0.0, T, cfg, dt=T)
    q = [float(v) for v in path.final_point()]
    d = math.hypot(q[0] - ic[0], q[1] - ic[1])
    ok = d < 1e-10
    _verdict("6-long", ok,
             f"omega2=629/676 return distance at T=2pi*676: {d:.2e}")


def test_criterion_07_born_equivariance():
    cfg = IntegratorConfig()
    m = presets.qubit()
    spec = EnsembleSpec(n=10_000, sampler="born", t_max=5.0, dt=1.0,
                        seed=2026, accumulate="endpoint", with_lcn=False)
    grid, _ = run_ensemble(m, spec, cfg, nx=45, workers=4)
    dens = density_histogram(m, 5.0, nx=45)
    D = l1_distance(grid, dens)
    floors = []
    for seed in (5151, 977):  # fresh draws at t=5 give the MC noise floor
        h = HistogramGrid(nx=45, ny=45)
        h.accumulate(np.asarray(sample_born(m, 5.0, 10_000, seed)))
        floors.append(l1_distance(h, dens))
    floor = sum(floors) / len(floors)
    ok = D <= 1.5 * floor
    _verdict(7, ok, f"propagated-ensemble L1 {D:.4f} vs noise floor "
                    f"{floor:.4f} (ratio {D / floor:.2f}, limit 1.5)")


def test_criterion_08_maximal_entanglement_ergodicity():
    cfg = IntegratorConfig()
    m = presets.qubit()
    g1, s1 = single_trajectory_histogram(m, presets.QUBIT_ICS["ergodic"],
                                         5e4, cfg, nx=90, dt=0.05,
                                         with_lcn=True)
    g2, _ = single_trajectory_histogram(m, presets.QUBIT_ICS["ergodic_alt"],
                                        5e4, cfg, nx=90, dt=0.05)
    spec = EnsembleSpec(n=250, sampler="born", t_max=1e3, dt=0.05, seed=31,
                        with_lcn=False)
    ens, _ = run_ensemble(m, spec, cfg, nx=90, workers=8)
    d1 = l1_distance(g1, ens)
    d2 = l1_distance(g2, ens)
    mutual = l1_distance(g1, g2)
    c1 = classify_trajectory(s1)
    ok = c1 == "chaotic" and d1 < 0.2 and d2 < 0.2 and mutual < 0.2
    _verdict(8, ok, f"single (2,-2) {c1}; L1 vs ensemble {d1:.4f} / "
                    f"{d2:.4f} (second IC), mutual {mutual:.4f} (limit 0.2)")


def test_criterion_09_weak_entanglement_divergence():
    cfg = IntegratorConfig()
    weak = presets.qubit(c2=0.001)
    ens, _ = run_ensemble(weak, EnsembleSpec(n=250, sampler="born", t_max=1e3,
                                             dt=0.05, seed=7, with_lcn=False),
                          cfg, nx=90, workers=8)
    single, series = single_trajectory_histogram(
        weak, presets.QUBIT_ICS["mixing"], 2e4, cfg, nx=90, dt=0.05,
        with_lcn=True,
    )
    D = l1_distance(single, ens)
    chaotic = classify_trajectory(series)
    band, _ = single_trajectory_histogram(
        presets.qubit(c2=0.2), presets.QUBIT_ICS["lissajous"], 1e3, cfg,
        nx=90, dt=0.05,
    )
    support = band.support_fraction()
    ok = chaotic == "chaotic" and D > 0.5 and support < 0.10
    _verdict(9, ok, f"c2=0.001 ensemble vs chaotic single L1 {D:.3f} "
                    f"(need > 0.5); c2=0.2 band support {support:.3f} of "
                    f"cells (need < 0.10)")


def test_criterion_10_partial_and_complete_integrability():
    tight = IntegratorConfig(rtol=1e-12, atol=1e-14)
    pear = presets.pear_3d()
    path = integrate_trajectory(pear, presets.PEAR_ICS["surface"], 0.0,
                                200.0, tight, dt=0.1)
    d_pear = surface_residual(path, IntegralSurfaceSpec(kind="pear"))
    circ = presets.circle_3d()
    cpath = integrate_trajectory(circ, presets.CIRCLE_IC, 0.0, 200.0, tight,
                                 dt=0.1)
    d_circ = surface_residual(cpath, IntegralSurfaceSpec(kind="circle-pair"))
    ok = d_pear < 1e-6 and d_circ < 1e-6
    _verdict(10, ok, f"conserved-quantity drift over t=200: pear surface "
                     f"{d_pear:.2e}, circle pair {d_circ:.2e} (limit 1e-6)")


def test_criterion_11_classical_baseline():
    _, driven = classical_lcn(DrivenOscillatorSpec(), (1.0, 1.0), 1e4, dt=2.0)
    c_driven = classify_trajectory(driven)
    _, free = classical_lcn(DrivenOscillatorSpec(eps=0.0), (1.0, 1.0), 2e3,
                            dt=1.0)
    c_free = classify_trajectory(free)
    osc = ClassicalOscillator(DrivenOscillatorSpec(eps=0.0))
    sec = stroboscopic_section(osc, (1.0, 0.5), GOLDEN_FREQ, 300,
                               cfg=IntegratorConfig(rtol=1e-12, atol=1e-14))
    drift = max(abs(x * x + v * v - 1.25) for _, _, (x, v) in sec)
    ok = (c_driven == "chaotic" and 0.03 < driven.trailing_mean < 0.3
          and c_free == "ordered" and drift < 1e-8)
    _verdict(11, ok, f"driven {c_driven} chi {driven.trailing_mean:.4f} "
                     f"(band 0.03..0.3); eps=0 {c_free}; section ellipse "
                     f"drift {drift:.2e} (limit 1e-8)")


def test_criterion_12_run_determinism(tmp_path):
    base = ("ensemble", "--n", "32", "--t-end", "50", "--dt", "0.5",
            "--grid", "90", "--seed", "2026")
    w1, w8 = tmp_path / "w1", tmp_path / "w8"
    assert cli.main([*base, "--workers", "1", "--out", str(w1)]) == 0
    assert cli.main([*base, "--workers", "8", "--out", str(w8)]) == 0
    identical = ((w1 / "histogram.csv").read_bytes()
                 == (w8 / "histogram.csv").read_bytes())
    replay_ok = cli.main(["--replay", str(w1 / "manifest.json")]) == 0
    ok = identical and replay_ok
    _verdict(12, ok, f"histogram bytes identical across 1/8 workers: "
                     f"{identical}; manifest replay verified: {replay_ok}")
