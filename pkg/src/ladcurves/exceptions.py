"""Exception hierarchy shared by the estimation, simulation and CLI layers."""


class LadCurvesError(Exception):
    """Base class for all package errors."""

    exit_code = 4


class ConfigurationError(LadCurvesError, ValueError):
    """Invalid or inconsistent configuration (kernel name, model parameters, ...)."""

    exit_code = 2


class DataError(LadCurvesError, ValueError):
    """Malformed or unusable input data."""

    exit_code = 3


class NoMassError(LadCurvesError):
    """A weighted problem has zero total weight (empty kernel window)."""


class DegenerateFitError(LadCurvesError):
    """Every grid point of a curve fit was empty."""


class ExtrapolationError(LadCurvesError):
    """A curve was requested outside the hull of its evaluation grid."""


class CvError(LadCurvesError):
    """Cross-validation could not produce a score."""


class DegenerateBiasError(LadCurvesError):
    """The bias coefficient vanishes, so no finite MSE-optimal bandwidth exists."""
