"""Driven classical oscillator used as the chaos baseline.

H = (xdot^2 + x^2)/2 + (eps x^4 / 4) exp(-x^2/(2 sigma^2)) cos(omega t),
a harmonic oscillator with a Gaussian-enveloped quartic kick.  The state is
(x, xdot) and the equations of motion are integrated with the same adaptive
machinery (and the same finite-time LCN bookkeeping) as the quantum
trajectories, so classifications are directly comparable.
"""

import math
from dataclasses import dataclass

import numpy as np

from .backends import FloatBackend
from .dynamics import IntegratorConfig, integrate_with_deviation
from .errors import ConfigError

GOLDEN_FREQ = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass
class DrivenOscillatorSpec:
    eps: float = 3.0
    omega: float = GOLDEN_FREQ
    sigma: float = 1.0

    def __post_init__(self):
        if self.omega <= 0:
            raise ConfigError(f"drive frequency must be positive, got {self.omega}")
        if self.sigma <= 0:
            raise ConfigError(f"envelope width must be positive, got {self.sigma}")


def potential(spec, x, t):
    """Potential part of H (oracle for the force via finite differences)."""
    s2 = spec.sigma**2
    return 0.5 * x * x + 0.25 * spec.eps * x**4 * math.exp(-x * x / (2 * s2)) * math.cos(
        spec.omega * t
    )


def classical_rhs(spec, x, xdot, t):
    """(xdot, xddot) with xddot = -dV/dx."""
    s2 = spec.sigma**2
    env = spec.eps * math.cos(spec.omega * t) * math.exp(-x * x / (2 * s2))
    force = -x - env * (x**3 - x**5 / (4 * s2))
    return xdot, force


class ClassicalOscillator:
    """Adapter exposing the driven oscillator to the trajectory integrator.

    The phase-space flow (x, xdot) plays the role the configuration-space
    velocity field plays for the quantum models; there is no density, so the
    near-node rejection logic stays inert.
    """

    kernel_kind = 4

    def __init__(self, spec=None, backend=None):
        self.spec = spec or DrivenOscillatorSpec()
        self.bk = backend or FloatBackend()
        self.dims = 2

    def kernel_fparams(self):
        s = self.spec
        return np.array([float(s.eps), float(s.omega), float(s.sigma)], dtype=float)

    def velocity(self, q, t):
        bk = self.bk
        x, xdot = q[0], q[1]
        s2 = bk.real(self.spec.sigma) ** 2
        env = (
            bk.real(self.spec.eps)
            * bk.cos(bk.real(self.spec.omega) * t)
            * bk.exp(-x * x / (2 * s2))
        )
        force = -x - env * (x**3 - x**5 / (4 * s2))
        return xdot, force

    def velocity_jacobian(self, q, t):
        bk = self.bk
        x = q[0]
        s2 = bk.real(self.spec.sigma) ** 2
        env = (
            bk.real(self.spec.eps)
            * bk.cos(bk.real(self.spec.omega) * t)
            * bk.exp(-x * x / (2 * s2))
        )
        x2 = x * x
        dfdx = -1 - env * (3 * x2 - 2.25 * x2 * x2 / s2 + x2 * x2 * x2 / (4 * s2 * s2))
        zero = bk.real(0)
        one = bk.real(1)
        return [[zero, one], [dfdx, zero]]

    def energy(self, q, t):
        return 0.5 * (q[1] ** 2) + potential(self.spec, q[0], t)


def classical_lcn(spec, q0, t_end, cfg=None, xi0=None, dt=None):
    """Finite-time LCN series for the driven oscillator."""
    cfg = cfg or IntegratorConfig()
    model = ClassicalOscillator(spec, cfg.backend())
    return integrate_with_deviation(model, q0, xi0, 0.0, t_end, cfg, dt=dt)
