"""Exception types shared across the package."""


class CollapseSpectraError(Exception):
    """Base class for all package errors."""


class ConfigurationError(CollapseSpectraError, ValueError):
    """Invalid identifier, parameter or configuration document."""

    def __init__(self, message, path=None):
        self.path = path
        if path is not None:
            message = f"{path}: {message}"
        super().__init__(message)


class UnitError(CollapseSpectraError, ValueError):
    """Conversion requested between dimensionally incompatible units."""


class IncompleteSystemError(CollapseSpectraError, ValueError):
    """A system lacks a field needed for the requested quantity."""


class RegimeError(CollapseSpectraError, ValueError):
    """Parameters fall outside the regime where the model applies."""


class NumericalFailure(CollapseSpectraError, ArithmeticError):
    """Integration produced non-finite values."""

    def __init__(self, message, step_index=None, trajectory=None):
        self.step_index = step_index
        self.trajectory = trajectory
        super().__init__(message)


class WindowError(CollapseSpectraError, ValueError):
    """Autocorrelation has not decayed inside the supplied window."""


class DegenerateInputError(CollapseSpectraError, ValueError):
    """Input carries no information (e.g. zero-amplitude correlation)."""


class NoPeakError(CollapseSpectraError, ValueError):
    """Spectrum has no interior maximum to fit."""
