"""Aiding-sensor models: lever-arm geometry, predicted measurements, noise.

All predictors map a full navigation state to the measurement a perfectly
calibrated sensor would return, including the lever-arm offset between the
body origin and the sensor head.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np

from .geodesy import (WGS84, CurvilinearPosition, EllipsoidParams,
                      cart_to_curv_matrix, curv_to_cart_matrix, earth_rate_n)
from .strapdown import ImuSample, NavState

#: Lever arms longer than this (m) are rejected as configuration mistakes.
MAX_LEVER_ARM = 10.0


@dataclass(frozen=True)
class LeverArm:
    """Body-frame offset (m) from the body origin to a sensor head."""

    offset: np.ndarray

    def __post_init__(self):
        arm = np.asarray(self.offset, dtype=float)
        if arm.shape != (3,):
            raise ValueError("lever arm must be length 3")
        if float(np.linalg.norm(arm)) >= MAX_LEVER_ARM:
            raise ValueError("lever arm norm %.3f m exceeds %.1f m"
                             % (float(np.linalg.norm(arm)), MAX_LEVER_ARM))
        object.__setattr__(self, "offset", arm)


@dataclass(frozen=True)
class LeverArmSet:
    """Lever arms for the full aiding suite (vehicle survey values)."""

    dvl: LeverArm = field(
        default_factory=lambda: LeverArm(np.array([0.0984, 0.0, 0.0548])))
    depth: LeverArm = field(
        default_factory=lambda: LeverArm(np.array([-1.4192, -0.0254, -0.0156])))
    range: LeverArm = field(
        default_factory=lambda: LeverArm(np.array([-0.0811, 0.0, 0.1678])))
    gps: LeverArm = field(
        default_factory=lambda: LeverArm(np.array([-1.2934, 0.0, -0.1926])))


@dataclass(frozen=True)
class NoiseConfig:
    """Sensor noise variances and the sea-surface ellipsoidal height.

    sigma2_gyro / sigma2_accel are continuous-time white-noise densities
    (rad^2/s and m^2/s^3); the per-sample variance at rate 1/dt is
    density/dt. The rest are per-measurement variances.
    """

    sigma2_gyro: float = 8.4616e-10
    sigma2_accel: float = 6.1549e-5
    sigma2_dvl: float = 1e-4
    sigma2_depth: float = 7.0e-5
    sigma2_gps: float = 6.25
    sigma2_range: float = 1.0
    h_sea: float = 0.0


@dataclass(frozen=True)
class DvlMeasurement:
    """Body-frame water-track velocity, m/s.

    ``outlier`` is simulator bookkeeping (set on injected spikes); the filter
    never reads it.
    """

    timestamp: float
    velocity: np.ndarray
    outlier: bool = False

    def __post_init__(self):
        object.__setattr__(self, "velocity",
                           np.asarray(self.velocity, dtype=float))


@dataclass(frozen=True)
class DepthMeasurement:
    """Depth below the sea surface at the pressure sensor, m (positive down)."""

    timestamp: float
    depth: float


@dataclass(frozen=True)
class GpsMeasurement:
    """Geodetic fix at the GPS antenna."""

    timestamp: float
    position: CurvilinearPosition


@dataclass(frozen=True)
class RangeMeasurement:
    """Slant range (m) to an acoustic transmitter of known position."""

    timestamp: float
    range_m: float
    transmitter: CurvilinearPosition


Measurement = DvlMeasurement | DepthMeasurement | GpsMeasurement | RangeMeasurement


def sensor_position(state: NavState, arm: LeverArm,
                    ellipsoid: EllipsoidParams = WGS84) -> CurvilinearPosition:
    """Curvilinear position of a sensor head offset by a body-frame arm."""
    t = cart_to_curv_matrix(state.position, ellipsoid)
    shift = t @ (state.attitude @ arm.offset)
    return CurvilinearPosition.from_array(state.position.as_array() + shift)


def omega_eb_b(state: NavState, sample: ImuSample,
               ellipsoid: EllipsoidParams = WGS84) -> np.ndarray:
    """Body rate relative to the earth frame, rad/s.

    Bias-corrected gyro rate minus the earth rotation resolved in the body
    frame (the transport rate is negligible at vehicle speeds).
    """
    wie = earth_rate_n(state.position.latitude, ellipsoid)
    return (sample.angular_rate - state.gyro_bias) - state.attitude.T @ wie


def predict_dvl(state: NavState, sample: ImuSample, arm: LeverArm,
                ellipsoid: EllipsoidParams = WGS84) -> np.ndarray:
    """Body-frame velocity at the DVL head: C_n^b v + omega_eb^b x l."""
    web = omega_eb_b(state, sample, ellipsoid)
    return state.attitude.T @ state.velocity + np.cross(web, arm.offset)


def predict_depth(state: NavState, arm: LeverArm, noise: NoiseConfig,
                  ellipsoid: EllipsoidParams = WGS84) -> float:
    """Depth below the sea surface at the pressure sensor, m."""
    p_s = sensor_position(state, arm, ellipsoid)
    return noise.h_sea - p_s.altitude


def predict_gps(state: NavState, arm: LeverArm,
                ellipsoid: EllipsoidParams = WGS84) -> CurvilinearPosition:
    """Geodetic position of the GPS antenna."""
    return sensor_position(state, arm, ellipsoid)


def predict_range(state: NavState, arm: LeverArm,
                  transmitter: CurvilinearPosition,
                  ellipsoid: EllipsoidParams = WGS84) -> float:
    """Slant range (m) from the transducer to a transmitter."""
    p_s = sensor_position(state, arm, ellipsoid)
    d = curv_to_cart_matrix(p_s, ellipsoid) @ (
        transmitter.as_array() - p_s.as_array())
    return float(math.sqrt(d @ d))


def dvl_noise_cov(noise: NoiseConfig) -> np.ndarray:
    return noise.sigma2_dvl * np.eye(3)


def depth_noise_var(noise: NoiseConfig) -> float:
    return noise.sigma2_depth


def gps_noise_cov(noise: NoiseConfig, position: CurvilinearPosition,
                  ellipsoid: EllipsoidParams = WGS84) -> np.ndarray:
    """GPS covariance mapped into curvilinear units at the given position."""
    t = cart_to_curv_matrix(position, ellipsoid)
    return noise.sigma2_gps * (t @ t.T)


def range_noise_var(noise: NoiseConfig) -> float:
    return noise.sigma2_range
