import math

import numpy as np
import pytest

from bohmsim import presets
from bohmsim.classical import ClassicalOscillator, DrivenOscillatorSpec
from bohmsim.dynamics import (
    IntegratorConfig,
    LCNSeries,
    classify_trajectory,
    detect_period,
    fd_velocity_jacobian,
    integrate_trajectory,
    integrate_with_deviation,
    rational_period,
    velocity_jacobian,
)
from bohmsim.errors import ConfigError, InsufficientSpanError, StepLimitError
from bohmsim.wavefunctions import (
    OscillatorSpec,
    SuperpositionModel,
    SuperpositionSpec,
)


# ------------------------------------------------------------ basic oracles

def test_integrator_matches_harmonic_closed_form():
    # eps = 0 reduces the driven oscillator to xddot = -x with the exact
    # solution x = x0 cos t + v0 sin t
    osc = ClassicalOscillator(DrivenOscillatorSpec(eps=0.0))
    x0, v0 = 0.8, 0.3
    path = integrate_trajectory(osc, (x0, v0), 0.0, 10.0, dt=0.25)
    worst = 0.0
    for t, (x, v) in zip(path.times, path.points):
        xe = x0 * math.cos(t) + v0 * math.sin(t)
        ve = -x0 * math.sin(t) + v0 * math.cos(t)
        worst = max(worst, math.hypot(x - xe, v - ve))
    assert worst < 1e-9


def test_stationary_state_does_not_move():
    spec = SuperpositionSpec(terms=[(1.0, (1, 0))],
                             oscillator=OscillatorSpec((1.0, 0.9)))
    m = SuperpositionModel(spec)
    path = integrate_trajectory(m, (0.7, -0.4), 0.0, 20.0, dt=1.0)
    drift = max(math.hypot(x - 0.7, y + 0.4) for x, y in path.points)
    assert drift < 1e-11


def test_sampling_grid_and_endpoint(system_a):
    path = integrate_trajectory(system_a, (0.75, 0.25), 0.0, 4.0, dt=0.5)
    assert np.allclose(np.asarray(path.times, dtype=float),
                       np.arange(0.0, 4.0 + 1e-12, 0.5))
    assert path.final_point() == tuple(path.points[-1])
    assert path.dim == 2
    assert path.stats["steps"] > 0
    samples = list(path.samples())
    assert samples[0].q == tuple(path.points[0])


def test_velocity_jacobian_helper_vs_fd(system_a):
    q, t = (0.9, -0.7), 2.3
    jac = velocity_jacobian(system_a, q, t)
    fd = fd_velocity_jacobian(system_a, q, t)
    for j in range(2):
        for l in range(2):
            assert abs(jac[j][l] - fd[j][l]) < 1e-5 * (1 + abs(fd[j][l]))


# --------------------------------------------------------- deviation vector

def test_deviation_does_not_perturb_the_trajectory(system_a):
    p1 = integrate_trajectory(system_a, (-1.0, -1.0), 0.0, 50.0, dt=1.0)
    p2, series = integrate_with_deviation(system_a, (-1.0, -1.0), None,
                                          0.0, 50.0, dt=1.0)
    assert np.array_equal(np.asarray(p1.points), np.asarray(p2.points))
    assert len(series.chi) == len(p1.times)


def test_renormalization_threshold_is_transparent(system_a):
    _, s6 = integrate_with_deviation(
        system_a, (-1.0, -1.0), None, 0.0, 300.0,
        IntegratorConfig(renorm_threshold=1e6), dt=1.0)
    _, s8 = integrate_with_deviation(
        system_a, (-1.0, -1.0), None, 0.0, 300.0,
        IntegratorConfig(renorm_threshold=1e8), dt=1.0)
    diff = np.max(np.abs(np.asarray(s6.chi[1:]) - np.asarray(s8.chi[1:])))
    assert diff < 1e-10


def test_isometric_tangent_flow_keeps_chi_at_zero():
    osc = ClassicalOscillator(DrivenOscillatorSpec(eps=0.0))
    _, series = integrate_with_deviation(osc, (1.0, 0.0), None, 0.0, 500.0,
                                         dt=1.0)
    assert max(abs(c) for c in series.chi[1:]) < 1e-9
    assert classify_trajectory(series) == "ordered"
    assert series.slope is None  # chi-floor path, no slope fit on noise


# ----------------------------------------------------------- classification

def _series(times, chi):
    return LCNSeries(times=np.asarray(times), chi=np.asarray(chi))


def test_classify_power_laws():
    t = np.linspace(1.0, 1e4, 4000)
    assert classify_trajectory(_series(t, 1.0 / t)) == "ordered"
    s = _series(t, np.full_like(t, 0.02))
    assert classify_trajectory(s) == "chaotic"
    assert s.trailing_mean == pytest.approx(0.02)
    assert classify_trajectory(_series(t, t ** -0.5)) == "undetermined"
    # saturated but tiny chi is not chaos
    assert classify_trajectory(_series(t, np.full_like(t, 1e-4))) == "undetermined"


def test_classify_needs_two_decades():
    t = np.linspace(10.0, 500.0, 200)
    with pytest.raises(InsufficientSpanError):
        classify_trajectory(_series(t, 1.0 / t))
    with pytest.raises(InsufficientSpanError):
        classify_trajectory(_series([1.0, 2.0], [0.1, 0.1]))


# ------------------------------------------------------------ configuration

def test_integrator_config_validation():
    cfg = IntegratorConfig()
    assert cfg.rtol == 1e-10 and cfg.atol == 1e-12
    assert cfg.dt_sample == 0.05
    assert cfg.use_compiled
    with pytest.raises(ConfigError):
        IntegratorConfig(rtol=-1.0)
    with pytest.raises(ConfigError):
        IntegratorConfig(min_step=1.0, max_step=0.1)


def test_step_budget_enforced(qubit_max):
    with pytest.raises(StepLimitError):
        integrate_trajectory(qubit_max, (2.0, -2.0), 0.0, 100.0,
                             IntegratorConfig(max_steps=50), dt=1.0)


# -------------------------------------------------------- extended precision

def test_extended_precision_agrees_with_hardware(system_a):
    pm = integrate_trajectory(system_a, (0.75, 0.25), 0.0, 5.0,
                              IntegratorConfig(digits=25), dt=1.0)
    ph = integrate_trajectory(system_a, (0.75, 0.25), 0.0, 5.0, dt=1.0)
    assert pm.backend_name == "extended"
    assert ph.backend_name == "hardware"
    worst = max(
        abs(float(a) - float(b))
        for qa, qb in zip(pm.points, ph.points)
        for a, b in zip(qa, qb)
    )
    assert worst < 1e-12


# ------------------------------------------------------------ periodic runs

def test_commensurable_return_distance():
    m = presets.system_a_commensurable(3, 2)
    T = rational_period(3, 2)
    assert T == pytest.approx(4 * math.pi, rel=1e-15)
    assert detect_period(m, (0.75, 0.25), T) < 1e-8
    # an incommensurable candidate does not close
    assert detect_period(m, (0.75, 0.25), 0.9 * T) > 1e-3
