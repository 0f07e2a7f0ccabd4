"""Bohmian trajectory simulations for oscillator superpositions.

De Broglie-Bohm trajectories, finite-time Lyapunov diagnostics, moving
nodal-point / X-point complexes, and Born-rule ensemble statistics for
three model families: 2-D harmonic-oscillator superpositions, 3-D
partially integrable superpositions, and entangled coherent-state qubit
pairs.  Hot loops run in a compiled extension when it is available; a pure
Python path with identical semantics is always present.
"""

from .backends import FloatBackend, MPBackend, get_backend
from .classical import ClassicalOscillator, DrivenOscillatorSpec, classical_lcn, classical_rhs
from .dynamics import (
    IntegratorConfig,
    LCNSeries,
    TrajectoryPath,
    classify_trajectory,
    detect_period,
    integrate_trajectory,
    integrate_with_deviation,
    rational_period,
    uses_compiled_kernels,
)
from .errors import (
    BohmsimError,
    ConfigError,
    NumericalError,
    SingularityError,
)
from .wavefunctions import (
    OscillatorSpec,
    QubitModel,
    QubitSpec,
    SuperpositionModel,
    SuperpositionSpec,
    SystemAModel,
    system_a_spec,
)

__version__ = "0.1.0"

__all__ = [
    "BohmsimError",
    "ClassicalOscillator",
    "ConfigError",
    "DrivenOscillatorSpec",
    "FloatBackend",
    "IntegratorConfig",
    "LCNSeries",
    "MPBackend",
    "NumericalError",
    "OscillatorSpec",
    "QubitModel",
    "QubitSpec",
    "SingularityError",
    "SuperpositionModel",
    "SuperpositionSpec",
    "SystemAModel",
    "TrajectoryPath",
    "classical_lcn",
    "classical_rhs",
    "classify_trajectory",
    "detect_period",
    "get_backend",
    "integrate_trajectory",
    "integrate_with_deviation",
    "rational_period",
    "system_a_spec",
    "uses_compiled_kernels",
    "__version__",
]
