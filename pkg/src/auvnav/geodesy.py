"""Ellipsoidal earth model: radii, frame rates, gravity and position transforms.

The navigation frame is north-east-down (NED). Curvilinear position is
(latitude, longitude, altitude) in radians/meters with altitude positive up;
plain length-3 float arrays are used for NED vectors throughout the package.
"""
from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

from .errors import SingularityError

#: Latitudes closer to a pole than this (rad) trip the singularity guard.
POLAR_GUARD = 1e-9


@dataclass(frozen=True)
class EllipsoidParams:
    """Reference ellipsoid and normal-gravity parameters.

    Defaults are WGS-84. The gravity model is the Somigliana formula with a
    linear free-air altitude correction.
    """

    semi_major_axis: float = 6378137.0
    eccentricity_sq: float = 6.69437999014e-3
    rotation_rate: float = 7.292115e-5
    gravity_equator: float = 9.7803253359
    gravity_pole: float = 9.8321849378

    @property
    def somigliana_k(self) -> float:
        """Constant k in gamma = ge * (1 + k sin^2 L) / sqrt(1 - e^2 sin^2 L)."""
        return (math.sqrt(1.0 - self.eccentricity_sq)
                * self.gravity_pole / self.gravity_equator - 1.0)


WGS84 = EllipsoidParams()


@dataclass(frozen=True)
class CurvilinearPosition:
    """Geodetic position: latitude/longitude in radians, altitude in meters (up).

    Latitude must lie in [-pi/2, pi/2]; longitude is normalized to (-pi, pi]
    on construction.
    """

    latitude: float
    longitude: float
    altitude: float

    def __post_init__(self):
        lat = float(self.latitude)
        lon = float(self.longitude)
        alt = float(self.altitude)
        if not (math.isfinite(lat) and math.isfinite(lon) and math.isfinite(alt)):
            raise ValueError("position components must be finite")
        if abs(lat) > math.pi / 2:
            raise ValueError("latitude %r outside [-pi/2, pi/2]" % lat)
        if not (-math.pi < lon <= math.pi):
            # Only touch out-of-range values: the wrap arithmetic rounds at
            # magnitude pi and would otherwise smear ~1e-16 rad onto every
            # in-range longitude passing through here.
            lon = math.pi - (math.pi - lon) % (2.0 * math.pi)
        object.__setattr__(self, "latitude", lat)
        object.__setattr__(self, "longitude", lon)
        object.__setattr__(self, "altitude", alt)

    def as_array(self) -> np.ndarray:
        return np.array([self.latitude, self.longitude, self.altitude])

    @classmethod
    def from_array(cls, p) -> "CurvilinearPosition":
        return cls(float(p[0]), float(p[1]), float(p[2]))


def _check_latitude(latitude):
    if abs(latitude) > math.pi / 2:
        raise ValueError("latitude %r outside [-pi/2, pi/2]" % latitude)


def _check_polar(latitude):
    if math.pi / 2 - abs(latitude) < POLAR_GUARD:
        raise SingularityError(
            "latitude %r within %g rad of a pole" % (latitude, POLAR_GUARD))


def principal_radii(latitude: float,
                    ellipsoid: EllipsoidParams = WGS84) -> tuple[float, float]:
    """Meridian and transverse curvature radii at a latitude.

    Parameters
    ----------
    latitude : float
        Geodetic latitude, rad, in [-pi/2, pi/2].
    ellipsoid : EllipsoidParams
        Reference ellipsoid.

    Returns
    -------
    rn, re : float
        Meridian (north-south) and transverse (east-west) radii, m.
    """
    _check_latitude(latitude)
    a = ellipsoid.semi_major_axis
    e2 = ellipsoid.eccentricity_sq
    x = 1.0 - e2 * math.sin(latitude) ** 2
    rn = a * (1.0 - e2) / x ** 1.5
    re = a / math.sqrt(x)
    return rn, re


def cart_to_curv_matrix(position: CurvilinearPosition,
                        ellipsoid: EllipsoidParams = WGS84) -> np.ndarray:
    """Matrix mapping an NED displacement (m) to curvilinear increments.

    Returns diag(1/(R_N + h), 1/((R_E + h) cos L), -1); the third entry is
    negative because altitude counts up while the NED z axis points down.

    Raises
    ------
    SingularityError
        Within ``POLAR_GUARD`` of a pole, where the longitude scale blows up.
    """
    _check_polar(position.latitude)
    rn, re = principal_radii(position.latitude, ellipsoid)
    h = position.altitude
    return np.diag([1.0 / (rn + h),
                    1.0 / ((re + h) * math.cos(position.latitude)),
                    -1.0])


def curv_to_cart_matrix(position: CurvilinearPosition,
                        ellipsoid: EllipsoidParams = WGS84) -> np.ndarray:
    """Matrix mapping curvilinear increments to an NED displacement (m).

    Inverse of :func:`cart_to_curv_matrix`:
    diag(R_N + h, (R_E + h) cos L, -1).
    """
    _check_polar(position.latitude)
    rn, re = principal_radii(position.latitude, ellipsoid)
    h = position.altitude
    return np.diag([rn + h,
                    (re + h) * math.cos(position.latitude),
                    -1.0])


def earth_rate_n(latitude: float,
                 ellipsoid: EllipsoidParams = WGS84) -> np.ndarray:
    """Earth rotation rate resolved in the NED frame, rad/s."""
    _check_latitude(latitude)
    w = ellipsoid.rotation_rate
    return np.array([w * math.cos(latitude), 0.0, -w * math.sin(latitude)])


def transport_rate_n(velocity: np.ndarray,
                     position: CurvilinearPosition,
                     ellipsoid: EllipsoidParams = WGS84) -> np.ndarray:
    """Rotation rate of the NED frame due to travel over the ellipsoid, rad/s.

    Parameters
    ----------
    velocity : (3,) array
        Ground velocity in NED, m/s.
    position : CurvilinearPosition
        Current position.

    Raises
    ------
    SingularityError
        Within ``POLAR_GUARD`` of a pole (tan L term).
    """
    _check_polar(position.latitude)
    rn, re = principal_radii(position.latitude, ellipsoid)
    h = position.altitude
    vn, ve = velocity[0], velocity[1]
    return np.array([ve / (re + h),
                     -vn / (rn + h),
                     -ve * math.tan(position.latitude) / (re + h)])


def gravity_n(position: CurvilinearPosition,
              ellipsoid: EllipsoidParams = WGS84) -> np.ndarray:
    """Normal gravity in NED (positive down), m/s^2.

    Somigliana latitude model with a linear free-air correction
    ``(1 - 2 h / a)``.
    """
    s2 = math.sin(position.latitude) ** 2
    g0 = (ellipsoid.gravity_equator * (1.0 + ellipsoid.somigliana_k * s2)
          / math.sqrt(1.0 - ellipsoid.eccentricity_sq * s2))
    g = g0 * (1.0 - 2.0 * position.altitude / ellipsoid.semi_major_axis)
    return np.array([0.0, 0.0, g])
