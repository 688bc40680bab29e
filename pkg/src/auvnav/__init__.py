"""Aided inertial navigation for underwater vehicles.

Strapdown propagation on the WGS-84 ellipsoid plus an unscented Kalman
filter on SO(3) x R^12 fusing DVL, depth, GPS and acoustic ranges, with a
deterministic mission simulator and a replay CLI.
"""
from .errors import (CovarianceError, ConfigError, GimbalLockError,
                     LogFormatError, NavError, RejectedSampleError,
                     SingularityError, StaleImuError)
from .geodesy import WGS84, CurvilinearPosition, EllipsoidParams
from .sensors import (DepthMeasurement, DvlMeasurement, GpsMeasurement,
                      LeverArm, LeverArmSet, NoiseConfig, RangeMeasurement)
from .strapdown import ImuSample, NavState, propagate, propagate_many
from .ukfm import (FilterConfig, NavFilter, initialize, inverse_retract,
                   predict, retract, sigma_points, update)

__version__ = "0.1.0"

__all__ = [
    "WGS84", "EllipsoidParams", "CurvilinearPosition",
    "ImuSample", "NavState", "propagate", "propagate_many",
    "LeverArm", "LeverArmSet", "NoiseConfig",
    "DvlMeasurement", "DepthMeasurement", "GpsMeasurement", "RangeMeasurement",
    "FilterConfig", "NavFilter", "retract", "inverse_retract",
    "sigma_points", "predict", "update", "initialize",
    "NavError", "SingularityError", "GimbalLockError", "RejectedSampleError",
    "CovarianceError", "StaleImuError", "ConfigError", "LogFormatError",
    "__version__",
]
