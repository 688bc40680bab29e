"""Strapdown inertial mechanization over the ellipsoidal earth.

The propagation scheme is second order: exact exponential attitude update
with earth/transport rates held at the pre-update point, specific force
rotated through the attitude midpoint, explicit Coriolis at the pre-update
velocity, and trapezoidal position integration.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import RejectedSampleError
from .geodesy import WGS84, CurvilinearPosition, EllipsoidParams

#: Longest accepted propagation interval, s.
MAX_DT = 0.5


@dataclass(frozen=True)
class ImuSample:
    """One IMU sample.

    ``angular_rate`` (rad/s) and ``specific_force`` (m/s^2) are body-frame
    averages over the interval (previous timestamp, ``timestamp``]; a
    synthesizer should evaluate the true signals at the interval midpoint.
    """

    timestamp: float
    angular_rate: np.ndarray
    specific_force: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "angular_rate",
                           np.asarray(self.angular_rate, dtype=float))
        object.__setattr__(self, "specific_force",
                           np.asarray(self.specific_force, dtype=float))
        if self.angular_rate.shape != (3,) or self.specific_force.shape != (3,):
            raise ValueError("angular_rate and specific_force must be length 3")


@dataclass
class NavState:
    """Full navigation state.

    attitude is the body-to-NED rotation matrix C_b^n; velocity is ground
    velocity in NED (m/s); biases are body-frame IMU biases.
    """

    attitude: np.ndarray
    velocity: np.ndarray
    position: CurvilinearPosition
    gyro_bias: np.ndarray = field(default_factory=lambda: np.zeros(3))
    accel_bias: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        self.attitude = np.asarray(self.attitude, dtype=float)
        self.velocity = np.asarray(self.velocity, dtype=float)
        self.gyro_bias = np.asarray(self.gyro_bias, dtype=float)
        self.accel_bias = np.asarray(self.accel_bias, dtype=float)
        if self.attitude.shape != (3, 3):
            raise ValueError("attitude must be a 3x3 matrix")
        for name in ("velocity", "gyro_bias", "accel_bias"):
            if getattr(self, name).shape != (3,):
                raise ValueError("%s must be length 3" % name)

    def copy(self) -> "NavState":
        return NavState(self.attitude.copy(), self.velocity.copy(),
                        self.position, self.gyro_bias.copy(),
                        self.accel_bias.copy())


def bias_correct(sample: ImuSample, state: NavState) -> tuple[np.ndarray, np.ndarray]:
    """Bias-corrected body angular rate and specific force."""
    return (sample.angular_rate - state.gyro_bias,
            sample.specific_force - state.accel_bias)


def _check_dt(dt):
    if not (0.0 < dt <= MAX_DT):
        raise RejectedSampleError("sample interval %r outside (0, %g] s"
                                  % (dt, MAX_DT))


def propagate(state: NavState, sample: ImuSample, dt: float,
              ellipsoid: EllipsoidParams = WGS84) -> NavState:
    """Advance the state by one IMU interval.

    Raises
    ------
    RejectedSampleError
        If dt is outside (0, MAX_DT].
    """
    _check_dt(dt)
    c = state.attitude.copy()
    v = state.velocity.copy()
    p = state.position.as_array()
    _kernels.propagate_chain(
        c, v, p, state.gyro_bias, state.accel_bias,
        sample.angular_rate.reshape(1, 3), sample.specific_force.reshape(1, 3),
        np.array([float(dt)]), _kernels.earth_array(ellipsoid))
    return NavState(c, v, CurvilinearPosition.from_array(p),
                    state.gyro_bias.copy(), state.accel_bias.copy())


def propagate_many(state: NavState, angular_rates: np.ndarray,
                   specific_forces: np.ndarray, dts: np.ndarray,
                   ellipsoid: EllipsoidParams = WGS84) -> NavState:
    """Advance the state through consecutive IMU samples (batch of rows)."""
    dts = np.asarray(dts, dtype=float)
    if dts.size and (dts.min() <= 0.0 or dts.max() > MAX_DT):
        raise RejectedSampleError("sample intervals outside (0, %g] s" % MAX_DT)
    c = state.attitude.copy()
    v = state.velocity.copy()
    p = state.position.as_array()
    _kernels.propagate_chain(
        c, v, p, state.gyro_bias, state.accel_bias,
        np.ascontiguousarray(angular_rates, dtype=float),
        np.ascontiguousarray(specific_forces, dtype=float),
        dts, _kernels.earth_array(ellipsoid))
    return NavState(c, v, CurvilinearPosition.from_array(p),
                    state.gyro_bias.copy(), state.accel_bias.copy())
