"""Exception types shared across the package."""


class NavError(Exception):
    """Base class for all navigation errors."""


class SingularityError(NavError, ValueError):
    """Geodesy evaluated too close to a pole (cos(latitude) ~ 0)."""


class GimbalLockError(NavError, ValueError):
    """Euler extraction attempted with pitch at +/- 90 degrees."""


class RejectedSampleError(NavError, ValueError):
    """IMU sample interval outside the accepted (0, 0.5] s range."""


class CovarianceError(NavError, ValueError):
    """Covariance lost positive definiteness (Cholesky failed)."""


class StaleImuError(NavError, ValueError):
    """Measurement update requested with an IMU sample older than allowed."""


class ConfigError(NavError, ValueError):
    """Bad configuration file contents. Carries a line number when known."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = "line %d: %s" % (line, message)
        super().__init__(message)


class LogFormatError(NavError, ValueError):
    """Bad measurement-log contents. Carries a line number when known."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = "line %d: %s" % (line, message)
        super().__init__(message)
