"""Closed-form velocity fields and node formulas against the generic law.

The generic guidance law evaluates Im(grad Psi / Psi) from the eigenstate
(or coherent-state) sums; the closed forms are independent algebraic
reductions.  Agreement to 1e-10 relative at random points is the contract.
"""

import math

import numpy as np
import pytest

from bohmsim import closedforms as cf
from bohmsim.presets import qubit, system_a
from bohmsim.wavefunctions import QubitModel, QubitSpec, SuperpositionModel


def _rel(a, b, floor=1e-12):
    na = math.hypot(*a)
    nb = math.hypot(*b)
    return math.hypot(a[0] - b[0], a[1] - b[1]) / max(na, nb, floor)


def _random_points(rng, n, lo=-3.0, hi=3.0, tlo=0.05, thi=20.0):
    for _ in range(n):
        yield tuple(rng.uniform(lo, hi, size=2)), rng.uniform(tlo, thi)


# ----------------------------------------------------------------- system A

def test_system_a_closed_velocity_vs_generic(rng):
    m = system_a()
    worst = 0.0
    for q, t in _random_points(rng, 100):
        closed = cf.system_a_velocity(m, q[0], q[1], t)
        generic = SuperpositionModel.velocity(m, q, t)
        worst = max(worst, _rel(closed, generic))
    assert worst < 1e-10


def test_system_a_jacobian_vs_generic_and_fd(rng):
    m = system_a()
    for q, t in _random_points(rng, 25):
        (vx, vy), jac = cf.system_a_jacobian(m, q[0], q[1], t)
        assert _rel((vx, vy), cf.system_a_velocity(m, q[0], q[1], t)) < 1e-14
        gen = SuperpositionModel.velocity_jacobian(m, q, t)
        for j in range(2):
            for l in range(2):
                assert abs(jac[j][l] - gen[j][l]) < 1e-10 * (1 + abs(gen[j][l]))
    # spot-check one Jacobian against central differences of the closed form
    q, t = (0.8, -0.6), 1.9
    h = 1e-6
    _, jac = cf.system_a_jacobian(m, q[0], q[1], t)
    for j in range(2):
        for l in range(2):
            qp = list(q)
            qm = list(q)
            qp[l] += h
            qm[l] -= h
            vp = cf.system_a_velocity(m, qp[0], qp[1], t)[j]
            vm = cf.system_a_velocity(m, qm[0], qm[1], t)[j]
            fd = (vp - vm) / (2 * h)
            assert abs(jac[j][l] - fd) < 1e-5 * (1 + abs(fd))


def test_system_a_node_zeroes_the_wavefunction(rng):
    m = system_a()
    checked = 0
    while checked < 100:
        t = rng.uniform(0.05, 40.0)
        x, y, finite = cf.system_a_node(m, t)
        if not finite:
            continue
        assert abs(m.psi((x, y), t)) < 1e-10
        checked += 1


def test_system_a_node_velocity_vs_finite_differences():
    m = system_a()
    h = 1e-6
    for t in (0.6, 1.27, 2.9):
        vx, vy = cf.system_a_node_velocity(m, t)
        xp, yp, okp = cf.system_a_node(m, t + h)
        xm, ym, okm = cf.system_a_node(m, t - h)
        assert okp and okm
        assert abs(vx - (xp - xm) / (2 * h)) < 1e-5 * (1 + abs(vx))
        assert abs(vy - (yp - ym) / (2 * h)) < 1e-5 * (1 + abs(vy))


def test_system_a_node_at_infinity_when_denominators_vanish():
    m = system_a()
    # sin(w2 t) = 0 at t = pi/w2
    t = math.pi / float(m.w2)
    _, _, finite = cf.system_a_node(m, t)
    assert not finite


# -------------------------------------------------------------- qubit pair

def test_qubit_closed_velocity_vs_generic(rng):
    m = qubit()
    worst = 0.0
    for q, t in _random_points(rng, 100, lo=-4.0, hi=4.0):
        closed = cf.qubit_velocity(m, q[0], q[1], t)
        psi, grad = m.dpsi(q, t)
        generic = ((grad[0] / psi).imag, (grad[1] / psi).imag)
        worst = max(worst, _rel(closed, generic))
    assert worst < 1e-10


def test_qubit_closed_velocity_matches_unrescaled_transcription(rng):
    # same formulas without the overflow guard, valid at moderate points
    m = qubit(c2=0.5)
    for q, t in _random_points(rng, 50, lo=-3.0, hi=3.0):
        x, y = q
        cx = math.cos(float(m.wx) * t)
        sx = math.sin(float(m.wx) * t)
        cy = math.cos(float(m.wy) * t)
        sy = math.sin(float(m.wy) * t)
        fxc, fxs = float(m.rx) * cx, float(m.rx) * sx
        fyc, fys = float(m.ry) * cy, float(m.ry) * sy
        u = fxc * x - fyc * y
        th = fxs * x - fys * y
        p = float(m.c1) ** 2 * math.exp(2 * u)
        qq = float(m.c2) ** 2 * math.exp(-2 * u)
        r = 2 * float(m.c1) * float(m.c2)
        dn = p + qq + r * math.cos(2 * th)
        vx = -(fxs * (p - qq) + fxc * r * math.sin(2 * th)) / dn
        vy = (fys * (p - qq) + fyc * r * math.sin(2 * th)) / dn
        assert _rel((vx, vy), cf.qubit_velocity(m, x, y, t)) < 1e-12


def test_qubit_denominator_lower_bound(rng):
    # Dn - (c1 e^u - c2 e^{-u})^2 = 2 c1 c2 (1 + cos 2 th) >= 0
    m = qubit(c2=0.5)
    for q, t in _random_points(rng, 50):
        x, y = q
        cx = math.cos(float(m.wx) * t)
        sx = math.sin(float(m.wx) * t)
        cy = math.cos(float(m.wy) * t)
        sy = math.sin(float(m.wy) * t)
        u = float(m.rx) * cx * x - float(m.ry) * cy * y
        th = float(m.rx) * sx * x - float(m.ry) * sy * y
        p = float(m.c1) ** 2 * math.exp(2 * u)
        qq = float(m.c2) ** 2 * math.exp(-2 * u)
        dn = p + qq + 2 * float(m.c1) * float(m.c2) * math.cos(2 * th)
        bound = (float(m.c1) * math.exp(u) - float(m.c2) * math.exp(-u)) ** 2
        assert dn >= bound - 1e-13 * (1 + dn)
        assert dn >= -1e-13


def test_qubit_jacobian_vs_finite_differences(rng):
    m = qubit()
    h = 1e-6
    for q, t in _random_points(rng, 15, lo=-3.0, hi=3.0):
        x, y = q
        _, jac = cf.qubit_jacobian(m, x, y, t)
        for (j, l), setter in (((0, 0), (h, 0)), ((0, 1), (0, h)),
                               ((1, 0), (h, 0)), ((1, 1), (0, h))):
            vp = cf.qubit_velocity(m, x + setter[0], y + setter[1], t)[j]
            vm = cf.qubit_velocity(m, x - setter[0], y - setter[1], t)[j]
            fd = (vp - vm) / (2 * h)
            assert abs(jac[j][l] - fd) < 2e-5 * (1 + abs(fd))


def test_qubit_nodes_zero_the_wavefunction(rng):
    m = qubit()
    checked = 0
    while checked < 100:
        t = rng.uniform(0.2, 30.0)
        roots, at_inf = cf.qubit_nodes(m, t, range(-9, 10))
        if at_inf:
            continue
        assert roots
        for k, x, y in roots:
            assert abs(m.psi((x, y), t)) < 1e-10
        checked += len(roots)


def test_qubit_node_parity_follows_coefficient_sign():
    pos = qubit(c2=0.5)
    roots, _ = cf.qubit_nodes(pos, 1.3, range(-9, 10))
    assert roots and all(k % 2 == 1 for k, _, _ in roots)
    neg = QubitModel(QubitSpec(0.8, -0.6))
    roots, _ = cf.qubit_nodes(neg, 1.3, range(-9, 10))
    assert roots and all(k % 2 == 0 for k, _, _ in roots)


def test_qubit_nodes_at_infinity_at_t0():
    m = qubit()
    roots, at_inf = cf.qubit_nodes(m, 0.0, range(-9, 10))
    assert at_inf and roots == []
