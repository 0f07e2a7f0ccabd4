"""Exception hierarchy shared by the library and the command line tool.

Two broad classes matter for exit codes: configuration problems (exit 1)
and numerical failures during a run (exit 2).
"""


class BohmsimError(Exception):
    """Base class for all tool-specific failures."""

    exit_code = 2


class ConfigError(BohmsimError):
    """Bad configuration: unknown keys, invalid values, inconsistent specs."""

    exit_code = 1


class NumericalError(BohmsimError):
    """A run failed for numerical reasons."""

    exit_code = 2


class SingularityError(NumericalError):
    """Trajectory hit the neighbourhood of a wavefunction node and the
    step size collapsed below the minimum."""


class StepLimitError(NumericalError):
    """Integrator exceeded its step budget."""


class InsufficientSpanError(NumericalError):
    """A classification was requested on a time series that is too short."""


class CoverageError(NumericalError):
    """Histogram grid does not capture enough probability mass."""


class EnvelopeError(NumericalError):
    """Rejection sampling envelope violated or acceptance rate collapsed."""


class GeometryMismatchError(NumericalError):
    """Two histograms with different grid geometry were compared."""


class ContinuationError(NumericalError):
    """Nodal-line continuation lost the curve (corrector divergence)."""


class NoSaddleError(NumericalError):
    """No X-point with saddle eigenstructure was found near a node."""


class EnsembleFailureError(NumericalError):
    """Too many trajectories of an ensemble failed to integrate."""
