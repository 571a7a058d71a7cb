"""Exception types raised across the package."""


class QuadtrackError(Exception):
    """Base class for all package errors."""


class ValidationError(QuadtrackError, ValueError):
    """Input outside the documented domain (bad coordinate, bad config, ...)."""


class UndefinedDirectionError(QuadtrackError, ValueError):
    """Two points coincide, so a bearing or line-of-sight is undefined."""


class BatteryDepletedError(QuadtrackError):
    """Attempt to draw power from a battery that already hit its cutoff."""


class NotFlyableError(QuadtrackError):
    """Configuration cannot lift its own weight."""


class UnboundedModelError(QuadtrackError):
    """No equilibrium exists inside the search bracket."""


class CalibrationError(QuadtrackError):
    """Power-model fit did not reach the required quality."""

    def __init__(self, message, worst_row=None, rms=None):
        super().__init__(message)
        self.worst_row = worst_row
        self.rms = rms


class ReportIOError(QuadtrackError, OSError):
    """Reading or writing a file failed; the message names the path."""
