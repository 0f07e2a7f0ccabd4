"""Ready-made model instances and the initial conditions used in the docs.

Every preset is a zero-argument (or keyword-light) factory so CLI configs
and tests can name a model instead of restating coefficient tables.  The
initial-condition dictionaries carry the behaviour each point was verified
to show at desk-scale horizons; they are data, not promises, and the tests
that rely on them re-check the classification.
"""

import math

from .classical import ClassicalOscillator, DrivenOscillatorSpec
from .errors import ConfigError
from .wavefunctions import (
    OscillatorSpec,
    QubitModel,
    QubitSpec,
    SuperpositionModel,
    SuperpositionSpec,
    SystemAModel,
)

SQRT3 = math.sqrt(3.0)

# z-height of the static nodal line of the three-term 3-D superposition
# below (the H2 zero), and the equator radius of the C = 1.99 surface.
PEAR_NODE_Z = 1.0 / math.sqrt(2.0 * SQRT3)
_F0 = PEAR_NODE_Z**2 / 2 - math.log(PEAR_NODE_Z) / (2 * SQRT3)
PEAR_EQUATOR_R = math.sqrt(1.99 - _F0)


def system_a(c1=1 / math.sqrt(2), c2=0.5, omega2=1 / math.sqrt(2), backend=None):
    """2-D three-term superposition with a single moving nodal point."""
    return SystemAModel(c1=c1, c2=c2, omega2=omega2, backend=backend)


def system_a_commensurable(p=3, q=2, backend=None):
    """Same model at rational omega2/omega1 = p/q; all trajectories periodic."""
    if q < 1 or p < 1:
        raise ConfigError(f"need positive integers, got p={p}, q={q}")
    return SystemAModel(omega2=p / q, backend=backend)


def qubit(c2=math.sqrt(2) / 2, backend=None):
    """Entangled coherent-state pair; c2 sets the degree of entanglement."""
    if not -1.0 <= c2 <= 1.0:
        raise ConfigError(f"c2 must lie in [-1, 1], got {c2}")
    return QubitModel(QubitSpec(c1=math.sqrt(1.0 - c2 * c2), c2=c2),
                      backend=backend)


def pear_3d(backend=None):
    """Equal-weight 3-term 3-D superposition; trajectories conserve
    x^2 + y^2 + z^2/2 - ln(z)/(2 w3) (closed pear-shaped surfaces, z > 0)."""
    a = 1 / math.sqrt(3.0)
    return SuperpositionModel(
        SuperpositionSpec(
            terms=[(a, (1, 0, 0)), (a, (0, 1, 0)), (a, (0, 0, 2))],
            oscillator=OscillatorSpec(omegas=(1.0, 1.0, SQRT3)),
        ),
        backend=backend,
    )


def open_3d(backend=None):
    """3-term superposition whose integral surface -x^2+y^2+z^2/2-ln(z)/(2 w3)
    is open."""
    a = 1 / math.sqrt(3.0)
    return SuperpositionModel(
        SuperpositionSpec(
            terms=[(a, (0, 0, 0)), (a, (1, 1, 0)), (a, (1, 0, 2))],
            oscillator=OscillatorSpec(omegas=(1.0, 1.0, SQRT3)),
        ),
        backend=backend,
    )


def circle_3d(backend=None):
    """Two-term superposition with two integrals (x^2+z^2 and y); every
    trajectory is a circle in a plane perpendicular to the y axis."""
    a = 1 / math.sqrt(2.0)
    return SuperpositionModel(
        SuperpositionSpec(
            terms=[(a, (1, 0, 0)), (a, (0, 0, 1))],
            oscillator=OscillatorSpec(omegas=(1.0, 1.0, SQRT3)),
        ),
        backend=backend,
    )


def classical_driven(eps=3.0, sigma=1.0, backend=None):
    """Gaussian-driven quartic-quintic oscillator, golden-ratio drive."""
    return ClassicalOscillator(DrivenOscillatorSpec(eps=eps, sigma=sigma),
                               backend=backend)


def _pear_equator_ic(degrees_from_node):
    th = math.radians(-45.0 + degrees_from_node)
    return (PEAR_EQUATOR_R * math.cos(th), PEAR_EQUATOR_R * math.sin(th),
            PEAR_NODE_Z)


# Verified behaviour at desk scale (see the test suite for the horizons).
SYSTEM_A_ICS = {
    "ordered": (0.75, 0.25),
    "chaotic": (-1.0, -1.0),
    "node_approach": (1.41, 2.134),
}
QUBIT_ICS = {
    "ergodic": (2.0, -2.0),
    "ergodic_alt": (-2.0, 2.0),
    "mixing": (0.5, 0.5),
    "lissajous": (2.7, -3.0),
}
PEAR_ICS = {
    # on the C = 1.99 surface, 10 degrees along the equator from a node
    "surface": _pear_equator_ic(10.0),
    # 5 degrees from the node: passes within 1e-5 of the nodal line
    "near_node": _pear_equator_ic(5.0),
    # mirror (z > 0) of a volume-filling starting point
    "volume": (1.0, 0.7, 1.0),
}
CIRCLE_IC = (1.0, 0.5, 0.8)
CLASSICAL_IC = (1.0, 1.0)

_REGISTRY = {
    "system_a": system_a,
    "system_a_commensurable": system_a_commensurable,
    "qubit": qubit,
    "qubit_max": lambda backend=None, **kw: qubit(math.sqrt(2) / 2,
                                                  backend=backend, **kw),
    "pear_3d": pear_3d,
    "open_3d": open_3d,
    "circle_3d": circle_3d,
    "classical": classical_driven,
}


def get_model(name, backend=None, **kwargs):
    """Look a preset up by name; kwargs go to the factory."""
    factory = _REGISTRY.get(name)
    if factory is None:
        raise ConfigError(
            f"unknown preset {name!r}; available: {sorted(_REGISTRY)}"
        )
    return factory(backend=backend, **kwargs)
