"""Rotation-matrix utilities: exp/log maps, Euler extraction, orthonormalization.

Attitude matrices are body-to-NED direction cosine matrices C_b^n. Euler
angles follow the aerospace Z-Y-X convention (heading, pitch, roll).
"""
from __future__ import annotations

import math

import numpy as np

from .errors import GimbalLockError

#: Below this rotation angle (rad) the Taylor branches of exp/log are used.
SMALL_ANGLE = 1e-8
#: Angles within this of pi take the diagonal axis-extraction branch of log.
PI_BRANCH = 1e-6
#: Pitch within this of +/- pi/2 trips the gimbal-lock guard.
GIMBAL_GUARD = 1e-6


def skew(v) -> np.ndarray:
    """Skew-symmetric matrix such that skew(a) @ b == cross(a, b)."""
    return np.array([[0.0, -v[2], v[1]],
                     [v[2], 0.0, -v[0]],
                     [-v[1], v[0], 0.0]])


def vee(m) -> np.ndarray:
    """Inverse of :func:`skew` for a skew-symmetric matrix."""
    return np.array([m[2, 1], m[0, 2], m[1, 0]])


def exp_so3(phi) -> np.ndarray:
    """Rodrigues formula: rotation vector (rad) to rotation matrix."""
    phi = np.asarray(phi, dtype=float)
    angle = math.sqrt(phi @ phi)
    k = skew(phi)
    if angle < SMALL_ANGLE:
        a = 1.0 - angle ** 2 / 6.0
        b = 0.5 - angle ** 2 / 24.0
    else:
        a = math.sin(angle) / angle
        b = (1.0 - math.cos(angle)) / angle ** 2
    return np.eye(3) + a * k + b * (k @ k)


def log_so3(r) -> np.ndarray:
    """Rotation matrix to rotation vector with magnitude in [0, pi].

    Near angle pi the axis is recovered from the dominant diagonal of
    (R + I)/2 (ties resolved by the first largest diagonal entry) and the
    sign fixed so the first nonzero axis component is positive.
    """
    r = np.asarray(r, dtype=float)
    cos_angle = min(1.0, max(-1.0, (np.trace(r) - 1.0) / 2.0))
    angle = math.acos(cos_angle)
    if angle < SMALL_ANGLE:
        return (1.0 + angle ** 2 / 6.0) * vee(r - r.T) / 2.0
    if angle < math.pi - PI_BRANCH:
        return angle / (2.0 * math.sin(angle)) * vee(r - r.T)
    # Angle at or next to pi: R ~ 2 u u^T - I, so diag((R + I)/2) = u_i^2.
    b = (r + np.eye(3)) / 2.0
    i = int(np.argmax(np.diag(b)))
    u = b[:, i] / math.sqrt(max(b[i, i], np.finfo(float).tiny))
    u /= math.sqrt(u @ u)
    for c in u:
        if abs(c) > 1e-12:
            if c < 0.0:
                u = -u
            break
    return angle * u


def from_euler(roll: float, pitch: float, heading: float) -> np.ndarray:
    """Z-Y-X Euler angles (rad) to a body-to-NED rotation matrix."""
    cr, sr = math.cos(roll), math.sin(roll)
    cp, sp = math.cos(pitch), math.sin(pitch)
    ch, sh = math.cos(heading), math.sin(heading)
    return np.array([
        [ch * cp, ch * sp * sr - sh * cr, ch * sp * cr + sh * sr],
        [sh * cp, sh * sp * sr + ch * cr, sh * sp * cr - ch * sr],
        [-sp, cp * sr, cp * cr]])


def to_euler(r) -> tuple[float, float, float]:
    """Rotation matrix to (roll, pitch, heading), rad.

    Raises
    ------
    GimbalLockError
        If pitch is within ``GIMBAL_GUARD`` of +/- pi/2, where roll and
        heading are not separable.
    """
    r = np.asarray(r, dtype=float)
    sp = min(1.0, max(-1.0, -r[2, 0]))
    pitch = math.asin(sp)
    if math.pi / 2 - abs(pitch) < GIMBAL_GUARD:
        raise GimbalLockError("pitch within %g rad of +/- pi/2" % GIMBAL_GUARD)
    roll = math.atan2(r[2, 1], r[2, 2])
    heading = math.atan2(r[1, 0], r[0, 0])
    return roll, pitch, heading


def orthonormality_residual(r) -> float:
    """Frobenius norm of R^T R - I."""
    r = np.asarray(r, dtype=float)
    return float(np.linalg.norm(r.T @ r - np.eye(3)))


def orthonormalize(r) -> np.ndarray:
    """Nearest rotation matrix in the Frobenius sense (polar decomposition)."""
    u, _, vt = np.linalg.svd(np.asarray(r, dtype=float))
    d = np.linalg.det(u @ vt)
    return u @ np.diag([1.0, 1.0, math.copysign(1.0, d)]) @ vt
