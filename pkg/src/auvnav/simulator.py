"""Deterministic mission simulator: truth trajectories and noisy sensors.

Missions are assembled from analytic segments (figure-eight, straight swaths,
blended turns, dive/climb transitions) whose velocity and acceleration are
closed-form, so the synthetic IMU comes from exact differentiation rather
than finite differences. Truth positions integrate the curvilinear kinematics
with RK4 on a half-interval grid; attitude follows the velocity vector with
zero sideslip and zero roll.

All randomness flows from one SeedSequence per mission, spawned into fixed
per-sensor child streams, so identical configs give bit-identical output no
matter which streams a caller consumes.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np

from . import _kernels
from .errors import ConfigError
from .geodesy import WGS84, CurvilinearPosition, EllipsoidParams
from .sensors import (DepthMeasurement, DvlMeasurement, GpsMeasurement,
                      LeverArmSet, Measurement, NoiseConfig, RangeMeasurement,
                      predict_depth, predict_dvl, predict_gps, predict_range)
from .strapdown import ImuSample, NavState

TWO_PI = 2.0 * math.pi
GPS_SURFACE_DEPTH = 0.5
MIN_HORIZONTAL_SPEED = 0.05


# ---------------------------------------------------------------------------
# Configuration


@dataclass(frozen=True)
class FigureEightSpec:
    """Surface alignment pattern: a lemniscate of the given radius/period."""

    radius: float = 50.0
    period: float = 120.0
    duration: float = 1800.0

    def __post_init__(self):
        if self.radius <= 0 or self.period <= 0 or self.duration < 0:
            raise ConfigError("figure-eight radius/period must be > 0 "
                              "and duration >= 0")


@dataclass(frozen=True)
class LawnmowerSpec:
    """Survey pattern: parallel swaths joined by half-turn arcs."""

    swath_length: float = 1000.0
    swath_spacing: float = 50.0
    swath_count: int = 9
    speed: float = 1.6
    depth: float = 3.0
    turn_blend: float = 3.0

    def __post_init__(self):
        if self.swath_count < 1:
            raise ConfigError("swath_count must be >= 1")
        if self.swath_length <= 0 or self.swath_spacing <= 0 or self.speed <= 0:
            raise ConfigError("swath length/spacing/speed must be > 0")
        if self.depth < 0:
            raise ConfigError("survey depth must be >= 0")
        radius = self.swath_spacing / 2.0
        if self.turn_blend <= 0 or self.turn_blend >= math.pi * radius / self.speed:
            raise ConfigError("turn_blend must lie in (0, pi*radius/speed)")


@dataclass(frozen=True)
class SensorSchedule:
    """Sensor rates in Hz (ranges by period in seconds)."""

    dvl_rate: float = 1.0
    depth_rate: float = 1.0
    gps_rate: float = 1.0
    range_period: float = 15.0
    range_delivery: float = 0.45

    def __post_init__(self):
        if min(self.dvl_rate, self.depth_rate, self.gps_rate) <= 0:
            raise ConfigError("sensor rates must be > 0")
        if self.range_period <= 0:
            raise ConfigError("range_period must be > 0")
        if not 0.0 <= self.range_delivery <= 1.0:
            raise ConfigError("range_delivery must lie in [0, 1]")


@dataclass(frozen=True)
class OutlierSpec:
    """Periodic single-axis DVL spikes of magnitude * sigma, for gate tests."""

    rate: float = 0.0
    magnitude: float = 10.0
    start_time: float = 0.0

    def __post_init__(self):
        if self.rate < 0:
            raise ConfigError("outlier rate must be >= 0")
        if self.rate > 0 and self.magnitude <= 0:
            raise ConfigError("outlier magnitude must be > 0")


@dataclass(frozen=True)
class MissionConfig:
    seed: int = 0
    origin: CurvilinearPosition = field(
        default_factory=lambda: CurvilinearPosition(math.radians(42.3),
                                                    math.radians(-83.7), 0.0))
    imu_rate: float = 100.0
    figure_eight: FigureEightSpec | None = field(
        default_factory=FigureEightSpec)
    lawnmower: LawnmowerSpec | None = field(default_factory=LawnmowerSpec)
    schedule: SensorSchedule = field(default_factory=SensorSchedule)
    outliers: OutlierSpec = field(default_factory=OutlierSpec)
    lever_arms: LeverArmSet = field(default_factory=LeverArmSet)
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    gyro_bias: tuple[float, float, float] = (1e-4, -5e-5, 2e-5)
    accel_bias: tuple[float, float, float] = (0.02, -0.01, 0.03)
    initial_hold: float = 2.0
    transition_time: float = 40.0
    surface_hold: float = 60.0

    def __post_init__(self):
        if self.imu_rate <= 0:
            raise ConfigError("imu_rate must be > 0")
        if self.figure_eight is None and self.lawnmower is None:
            raise ConfigError("mission needs a figure-eight or a lawnmower")
        if self.initial_hold < 0:
            raise ConfigError("initial_hold must be >= 0")
        if self.transition_time <= 0 or self.surface_hold < 0:
            raise ConfigError("transition_time must be > 0, surface_hold >= 0")
        for rate in (self.schedule.dvl_rate, self.schedule.depth_rate,
                     self.schedule.gps_rate):
            stride = self.imu_rate / rate
            if abs(stride - round(stride)) > 1e-9 or round(stride) < 1:
                raise ConfigError("sensor rates must divide imu_rate")
        ticks = self.schedule.range_period * self.imu_rate
        if abs(ticks - round(ticks)) > 1e-6 or round(ticks) < 1:
            raise ConfigError("range_period must be a multiple of the IMU step")


# ---------------------------------------------------------------------------
# Analytic segments: v(tau), a(tau) in NED, tau local to the segment


class _Fig8:
    def __init__(self, spec: FigureEightSpec):
        self.duration = spec.duration
        self._r = spec.radius
        self._w = TWO_PI / spec.period

    def eval(self, tau):
        th = self._w * tau
        rw = self._r * self._w
        v = np.stack([rw * np.cos(th), rw * np.cos(2.0 * th),
                      np.zeros_like(tau)], axis=1)
        a = np.stack([-rw * self._w * np.sin(th),
                      -2.0 * rw * self._w * np.sin(2.0 * th),
                      np.zeros_like(tau)], axis=1)
        return v, a


class _Straight:
    def __init__(self, speed: float, heading: float, duration: float):
        self.duration = duration
        self._v = np.array([speed * math.cos(heading),
                            speed * math.sin(heading), 0.0])

    def eval(self, tau):
        n = tau.shape[0]
        return np.tile(self._v, (n, 1)), np.zeros((n, 3))


class _Rest:
    """Floating at rest on the surface (pre-mission hold)."""

    def __init__(self, duration: float):
        self.duration = duration

    def eval(self, tau):
        n = tau.shape[0]
        return np.zeros((n, 3)), np.zeros((n, 3))


class _Turn:
    """Half turn at constant speed: raised-cosine yaw-rate ramps around a
    constant-rate core, so acceleration is continuous with the straights."""

    def __init__(self, heading: float, sign: float, speed: float,
                 rate: float, blend: float):
        self._psi0 = heading
        self._sign = sign
        self._speed = speed
        self._m = rate
        self._b = blend
        self._hold = math.pi / rate - blend
        self.duration = 2.0 * blend + self._hold

    def _profile(self, tau):
        m, b, hold = self._m, self._b, self._hold
        psi = np.empty_like(tau)
        rate = np.empty_like(tau)
        up = tau < b
        mid = (tau >= b) & (tau < b + hold)
        down = tau >= b + hold
        tu = tau[up]
        rate[up] = 0.5 * m * (1.0 - np.cos(math.pi * tu / b))
        psi[up] = 0.5 * m * (tu - b / math.pi * np.sin(math.pi * tu / b))
        psi_b = 0.5 * m * b
        rate[mid] = m
        psi[mid] = psi_b + m * (tau[mid] - b)
        td = tau[down] - b - hold
        rate[down] = 0.5 * m * (1.0 + np.cos(math.pi * td / b))
        psi[down] = psi_b + m * hold \
            + 0.5 * m * (td + b / math.pi * np.sin(math.pi * td / b))
        return psi, rate

    def eval(self, tau):
        prof, rate = self._profile(tau)
        psi = self._psi0 + self._sign * prof
        rate = self._sign * rate
        c, s = np.cos(psi), np.sin(psi)
        sp = self._speed
        v = np.stack([sp * c, sp * s, np.zeros_like(tau)], axis=1)
        a = np.stack([-sp * rate * s, sp * rate * c,
                      np.zeros_like(tau)], axis=1)
        return v, a


class _Blend:
    """Cubic Hermite on velocity between segment endpoints, plus an optional
    smooth depth change (bump profile with zero end rates and accelerations)."""

    def __init__(self, duration: float, v0, a0, v1, a1, depth_delta: float):
        self.duration = duration
        self._v0 = np.asarray(v0, dtype=float)
        self._a0 = np.asarray(a0, dtype=float)
        self._v1 = np.asarray(v1, dtype=float)
        self._a1 = np.asarray(a1, dtype=float)
        self._dd = depth_delta

    def eval(self, tau):
        T = self.duration
        u = tau / T
        u2 = u * u
        u3 = u2 * u
        h00 = 2.0 * u3 - 3.0 * u2 + 1.0
        h10 = u3 - 2.0 * u2 + u
        h01 = -2.0 * u3 + 3.0 * u2
        h11 = u3 - u2
        d00 = (6.0 * u2 - 6.0 * u) / T
        d10 = (3.0 * u2 - 4.0 * u + 1.0) / T
        d01 = (-6.0 * u2 + 6.0 * u) / T
        d11 = (3.0 * u2 - 2.0 * u) / T
        v = (np.outer(h00, self._v0) + np.outer(h10, T * self._a0)
             + np.outer(h01, self._v1) + np.outer(h11, T * self._a1))
        a = (np.outer(d00, self._v0) + np.outer(d10, T * self._a0)
             + np.outer(d01, self._v1) + np.outer(d11, T * self._a1))
        if self._dd != 0.0:
            om = 1.0 - u
            w = 140.0 * u3 * om ** 3
            wd = 420.0 * u2 * om ** 2 * (1.0 - 2.0 * u)
            v[:, 2] += self._dd * w / T
            a[:, 2] += self._dd * wd / T ** 2
        return v, a


def _segment_exit(seg):
    v, a = seg.eval(np.array([seg.duration]))
    return v[0], a[0]


RUN_IN_TIME = 30.0


def _build_segments(cfg: MissionConfig):
    moving = []
    if cfg.figure_eight is not None and cfg.figure_eight.duration > 0:
        moving.append(_Fig8(cfg.figure_eight))
    lm = cfg.lawnmower
    if lm is not None:
        if not moving:
            moving.append(_Straight(lm.speed, 0.0, RUN_IN_TIME))
        v0, a0 = _segment_exit(moving[-1])
        moving.append(_Blend(cfg.transition_time, v0, a0,
                             np.array([lm.speed, 0.0, 0.0]), np.zeros(3),
                             depth_delta=lm.depth))
        radius = lm.swath_spacing / 2.0
        rate = lm.speed / radius
        heading = 0.0
        for i in range(lm.swath_count):
            moving.append(_Straight(lm.speed, heading,
                                    lm.swath_length / lm.speed))
            if i < lm.swath_count - 1:
                sign = 1.0 if i % 2 == 0 else -1.0
                moving.append(_Turn(heading, sign, lm.speed, rate,
                                    lm.turn_blend))
                heading = math.pi - heading
        v0, _ = _segment_exit(moving[-1])
        moving.append(_Blend(cfg.transition_time, v0, np.zeros(3),
                             v0.copy(), np.zeros(3), depth_delta=-lm.depth))
        if cfg.surface_hold > 0:
            moving.append(_Straight(lm.speed, heading, cfg.surface_hold))
    segs = []
    if cfg.initial_hold > 0 and moving:
        v1, a1 = moving[0].eval(np.zeros(1))
        segs.append(_Rest(cfg.initial_hold))
        segs.append(_Blend(cfg.transition_time, np.zeros(3), np.zeros(3),
                           v1[0], a1[0], depth_delta=0.0))
    segs.extend(moving)
    return segs


def _eval_profile(segs, t):
    """Velocity/acceleration at global times t, dispatching per segment."""
    bounds = np.concatenate([[0.0], np.cumsum([s.duration for s in segs])])
    idx = np.clip(np.searchsorted(bounds, t, side="right") - 1,
                  0, len(segs) - 1)
    v = np.empty((t.shape[0], 3))
    a = np.empty((t.shape[0], 3))
    for k, seg in enumerate(segs):
        sel = idx == k
        if np.any(sel):
            v[sel], a[sel] = seg.eval(t[sel] - bounds[k])
    return v, a


# ---------------------------------------------------------------------------
# Vectorized earth terms (mirror geodesy on arrays; pinned against it in tests)


def _radii_vec(lat, ell: EllipsoidParams):
    s2 = np.sin(lat) ** 2
    x = 1.0 - ell.eccentricity_sq * s2
    rn = ell.semi_major_axis * (1.0 - ell.eccentricity_sq) / x ** 1.5
    re = ell.semi_major_axis / np.sqrt(x)
    return rn, re


def _gravity_vec(lat, alt, ell: EllipsoidParams):
    s2 = np.sin(lat) ** 2
    g = ell.gravity_equator * (1.0 + ell.somigliana_k * s2) \
        / np.sqrt(1.0 - ell.eccentricity_sq * s2)
    return g * (1.0 - 2.0 * alt / ell.semi_major_axis)


def _earth_rate_vec(lat, ell: EllipsoidParams):
    z = np.zeros_like(lat)
    return np.stack([ell.rotation_rate * np.cos(lat), z,
                     -ell.rotation_rate * np.sin(lat)], axis=1)


def _transport_vec(v, lat, alt, ell: EllipsoidParams):
    rn, re = _radii_vec(lat, ell)
    return np.stack([v[:, 1] / (re + alt),
                     -v[:, 0] / (rn + alt),
                     -v[:, 1] * np.tan(lat) / (re + alt)], axis=1)


def _attitude_arrays(v, a):
    """Rotation matrices C_b^n and body rates w_nb^b from velocity/accel.

    Zero sideslip, zero roll: the body x-axis tracks the velocity vector.
    Near-rest samples (horizontal speed under MIN_HORIZONTAL_SPEED) hold the
    heading of the nearest earlier moving sample, level pitch and zero body
    rates; the rest/blend constructions keep the track direction constant
    while speed ramps through zero, so the held values join smoothly.
    """
    vn, ve, vd = v[:, 0], v[:, 1], v[:, 2]
    an, ae, ad = a[:, 0], a[:, 1], a[:, 2]
    vh2 = vn * vn + ve * ve
    vh = np.sqrt(vh2)
    n = v.shape[0]
    ok = vh >= MIN_HORIZONTAL_SPEED
    cpsi = np.ones(n)
    spsi = np.zeros(n)
    sth = np.zeros(n)
    cth = np.ones(n)
    psi_dot = np.zeros(n)
    th_dot = np.zeros(n)
    i = np.flatnonzero(ok)
    if i.size:
        cpsi[i] = vn[i] / vh[i]
        spsi[i] = ve[i] / vh[i]
        vmag = np.sqrt(vh2[i] + vd[i] * vd[i])
        sth[i] = -vd[i] / vmag
        cth[i] = vh[i] / vmag
        psi_dot[i] = (vn[i] * ae[i] - ve[i] * an[i]) / vh2[i]
        vh_dot = (vn[i] * an[i] + ve[i] * ae[i]) / vh[i]
        th_dot[i] = (-ad[i] * vh[i] + vd[i] * vh_dot) / (vh2[i] + vd[i] * vd[i])
        if i.size < n:
            gap = np.flatnonzero(~ok)
            near = np.clip(np.searchsorted(i, gap) - 1, 0, i.size - 1)
            src = i[near]
            cpsi[gap] = cpsi[src]
            spsi[gap] = spsi[src]
    w_nb = np.stack([-psi_dot * sth, th_dot, psi_dot * cth], axis=1)
    n = v.shape[0]
    c = np.empty((n, 3, 3))
    c[:, 0, 0] = cpsi * cth
    c[:, 0, 1] = -spsi
    c[:, 0, 2] = cpsi * sth
    c[:, 1, 0] = spsi * cth
    c[:, 1, 1] = cpsi
    c[:, 1, 2] = spsi * sth
    c[:, 2, 0] = -sth
    c[:, 2, 1] = 0.0
    c[:, 2, 2] = cth
    return c, w_nb


# ---------------------------------------------------------------------------
# Trajectory


@dataclass(frozen=True)
class TruthRecord:
    timestamp: float
    state: NavState


class Trajectory:
    """Ground truth sampled on the IMU grid plus interval midpoints.

    Positions come from one RK4 chain at half the IMU step, so both the grid
    states and the midpoint states (used for IMU synthesis) are consistent.
    """

    def __init__(self, times_h, pos_h, vel_h, acc_h, dt, path_length,
                 ellipsoid: EllipsoidParams = WGS84):
        self._times_h = times_h
        self._pos_h = pos_h
        self._vel_h = vel_h
        self._acc_h = acc_h
        self.dt = dt
        self.path_length = path_length
        self.ellipsoid = ellipsoid

    @property
    def times(self):
        return self._times_h[::2]

    @property
    def positions(self):
        return self._pos_h[::2]

    @property
    def velocities(self):
        return self._vel_h[::2]

    @property
    def accels(self):
        return self._acc_h[::2]

    @property
    def mid_times(self):
        return self._times_h[1::2]

    @property
    def mid_positions(self):
        return self._pos_h[1::2]

    @property
    def mid_velocities(self):
        return self._vel_h[1::2]

    @property
    def mid_accels(self):
        return self._acc_h[1::2]

    @property
    def duration(self):
        return float(self._times_h[-1])

    def __len__(self):
        return self.times.shape[0]

    def attitudes(self, idx=None):
        if idx is None:
            v, a = self.velocities, self.accels
        else:
            v, a = self.velocities[idx], self.accels[idx]
        c, _ = _attitude_arrays(v, a)
        return c

    def state_at(self, i: int) -> NavState:
        c = self.attitudes(slice(i, i + 1))[0]
        return NavState(c, self.velocities[i].copy(),
                        CurvilinearPosition.from_array(self.positions[i]))

    def states_at(self, idx) -> list[NavState]:
        cs = self.attitudes(idx)
        out = []
        for c, vel, pos in zip(cs, self.velocities[idx], self.positions[idx]):
            out.append(NavState(c, vel.copy(),
                                CurvilinearPosition.from_array(pos)))
        return out

    def records(self, stride: int = 1):
        for i in range(0, len(self), stride):
            yield TruthRecord(float(self.times[i]), self.state_at(i))


def _integrate_positions(origin, vq, dt_half, ell: EllipsoidParams):
    """RK4 chain over ``p' = T(p) v`` at step dt_half; vq holds velocities at
    quarter-step resolution (start, mid, end of every half step)."""
    return _kernels.integrate_position(origin, vq, dt_half,
                                       _kernels.earth_array(ell))


def mission_duration(cfg: MissionConfig) -> float:
    """Total mission length in seconds implied by the trajectory spec."""
    return sum(s.duration for s in _build_segments(cfg))


def generate_trajectory(cfg: MissionConfig) -> Trajectory:
    """Ground-truth trajectory on the IMU grid (plus midpoints)."""
    segs = _build_segments(cfg)
    total = sum(s.duration for s in segs)
    dt = 1.0 / cfg.imu_rate
    n = int(math.floor(total / dt + 1e-9))
    if n < 1:
        raise ConfigError("mission shorter than one IMU interval")
    tq = np.arange(4 * n + 1) * (dt / 4.0)
    vq, aq = _eval_profile(segs, tq)
    pos_h = _integrate_positions(cfg.origin.as_array(), vq, dt / 2.0,
                                 WGS84)
    speeds = np.linalg.norm(vq, axis=1)
    hq = dt / 4.0
    path = (hq / 3.0) * (speeds[0] + speeds[-1]
                         + 4.0 * speeds[1:-1:2].sum()
                         + 2.0 * speeds[2:-1:2].sum())
    return Trajectory(tq[::2], pos_h, vq[::2], aq[::2], dt, float(path))


# ---------------------------------------------------------------------------
# Sensor synthesis


_SPAWN_KEYS = ("imu", "dvl", "depth", "gps", "range", "transmitter")


def _mission_rngs(seed: int) -> dict[str, np.random.Generator]:
    children = np.random.SeedSequence(seed).spawn(len(_SPAWN_KEYS))
    return {k: np.random.default_rng(c) for k, c in zip(_SPAWN_KEYS, children)}


@dataclass
class ImuStream:
    times: np.ndarray
    angular_rates: np.ndarray
    specific_forces: np.ndarray

    def __len__(self):
        return self.times.shape[0]

    def __iter__(self):
        for t, w, f in zip(self.times, self.angular_rates,
                           self.specific_forces):
            yield ImuSample(float(t), w.copy(), f.copy())


def synthesize_imu(traj: Trajectory, cfg: MissionConfig,
                   rng: np.random.Generator | None = None) -> ImuStream:
    """Gyro/accel stream on the IMU grid, each sample the midpoint value of
    its interval, corrupted by the configured biases and white noise."""
    if rng is None:
        rng = _mission_rngs(cfg.seed)["imu"]
    ell = traj.ellipsoid
    v = traj.mid_velocities
    a = traj.mid_accels
    p = traj.mid_positions
    lat, alt = p[:, 0], p[:, 2]
    c, w_nb = _attitude_arrays(v, a)
    wie = _earth_rate_vec(lat, ell)
    wen = _transport_vec(v, lat, alt, ell)
    w_in = wie + wen
    w_ib = w_nb + np.einsum("nji,nj->ni", c, w_in)
    g = np.zeros_like(v)
    g[:, 2] = _gravity_vec(lat, alt, ell)
    f_n = a - g + np.cross(wen + 2.0 * wie, v)
    f_b = np.einsum("nji,nj->ni", c, f_n)
    dt = traj.dt
    n = v.shape[0]
    sig_g = math.sqrt(cfg.noise.sigma2_gyro / dt)
    sig_a = math.sqrt(cfg.noise.sigma2_accel / dt)
    ws = w_ib + np.asarray(cfg.gyro_bias) + sig_g * rng.standard_normal((n, 3))
    fs = f_b + np.asarray(cfg.accel_bias) + sig_a * rng.standard_normal((n, 3))
    return ImuStream(traj.times[1:].copy(), ws, fs)


def _tick_indices(n_steps: int, imu_rate: float, rate: float) -> np.ndarray:
    stride = int(round(imu_rate / rate))
    return np.arange(stride, n_steps + 1, stride)


def _transmitter_track(traj: Trajectory, rng: np.random.Generator):
    """Slow smooth drift around the survey-area center, speed <= 0.3 m/s."""
    pos = traj.positions
    center = 0.5 * (pos.min(axis=0) + pos.max(axis=0))
    center[2] = -1.0
    # peak speed sqrt((40*2pi/1200)^2 + (25*2pi/800)^2) = 0.29 m/s
    amp = np.array([40.0, 25.0])
    period = np.array([1200.0, 800.0])
    phase = rng.uniform(0.0, TWO_PI, size=2)
    rn, re = _radii_vec(np.array([center[0]]), traj.ellipsoid)
    scale = np.array([1.0 / (rn[0] + center[2]),
                      1.0 / ((re[0] + center[2]) * math.cos(center[0]))])

    def at(t: float) -> CurvilinearPosition:
        off = amp * np.sin(TWO_PI * t / period + phase)
        return CurvilinearPosition(center[0] + off[0] * scale[0],
                                   center[1] + off[1] * scale[1], center[2])

    return at


def synthesize_measurements(traj: Trajectory, cfg: MissionConfig,
                            rngs: dict[str, np.random.Generator] | None = None
                            ) -> list[Measurement]:
    """Time-ordered DVL/depth/GPS/range stream evaluated on the truth.

    GPS is emitted only while the true depth is shallower than 0.5 m; ranges
    follow the period/delivery schedule from a drifting transmitter; DVL
    outliers are periodic single-axis spikes replacing the noise term.
    """
    if rngs is None:
        rngs = _mission_rngs(cfg.seed)
    ell = traj.ellipsoid
    arms = cfg.lever_arms
    noise = cfg.noise
    n_steps = len(traj) - 1
    out: list[Measurement] = []

    dvl_idx = _tick_indices(n_steps, cfg.imu_rate, cfg.schedule.dvl_rate)
    outlier_ticks: set[int] = set()
    if cfg.outliers.rate > 0 and dvl_idx.size:
        stride = max(1, int(round(cfg.schedule.dvl_rate / cfg.outliers.rate)))
        eligible = np.nonzero(
            traj.times[dvl_idx] >= cfg.outliers.start_time)[0]
        outlier_ticks = set(eligible[::stride].tolist())
    sig_dvl = math.sqrt(noise.sigma2_dvl)
    dvl_noise = sig_dvl * rngs["dvl"].standard_normal((dvl_idx.size, 3))
    states = traj.states_at(dvl_idx)
    # true body rates for the lever-arm term, free of bias and noise
    v_m = traj.velocities[dvl_idx]
    a_m = traj.accels[dvl_idx]
    c_m, w_nb = _attitude_arrays(v_m, a_m)
    p_m = traj.positions[dvl_idx]
    w_in = _earth_rate_vec(p_m[:, 0], ell) \
        + _transport_vec(v_m, p_m[:, 0], p_m[:, 2], ell)
    w_ib = w_nb + np.einsum("nji,nj->ni", c_m, w_in)
    outlier_axis = {j: k % 3 for k, j in enumerate(sorted(outlier_ticks))}
    for j, (i, st) in enumerate(zip(dvl_idx, states)):
        t = float(traj.times[i])
        sample = ImuSample(t, w_ib[j], np.zeros(3))
        z = predict_dvl(st, sample, arms.dvl, ell)
        if j in outlier_axis:
            spike = dvl_noise[j].copy()
            spike[outlier_axis[j]] = cfg.outliers.magnitude * sig_dvl
            out.append(DvlMeasurement(t, z + spike, outlier=True))
        else:
            out.append(DvlMeasurement(t, z + dvl_noise[j]))

    depth_idx = _tick_indices(n_steps, cfg.imu_rate, cfg.schedule.depth_rate)
    depth_noise = math.sqrt(noise.sigma2_depth) \
        * rngs["depth"].standard_normal(depth_idx.size)
    for j, (i, st) in enumerate(zip(depth_idx, traj.states_at(depth_idx))):
        d = predict_depth(st, arms.depth, noise, ell)
        out.append(DepthMeasurement(float(traj.times[i]),
                                    d + float(depth_noise[j])))

    gps_idx = _tick_indices(n_steps, cfg.imu_rate, cfg.schedule.gps_rate)
    surface = traj.positions[gps_idx, 2] > -GPS_SURFACE_DEPTH
    gps_idx = gps_idx[surface]
    sig_gps = math.sqrt(noise.sigma2_gps)
    gps_noise = sig_gps * rngs["gps"].standard_normal((gps_idx.size, 3))
    for j, (i, st) in enumerate(zip(gps_idx, traj.states_at(gps_idx))):
        fix = predict_gps(st, arms.gps, ell)
        rn, re = _radii_vec(np.array([fix.latitude]), ell)
        cart = gps_noise[j]
        delta = np.array([cart[0] / (rn[0] + fix.altitude),
                          cart[1] / ((re[0] + fix.altitude)
                                     * math.cos(fix.latitude)),
                          -cart[2]])
        out.append(GpsMeasurement(
            float(traj.times[i]),
            CurvilinearPosition.from_array(fix.as_array() + delta)))

    tick = int(round(cfg.schedule.range_period * cfg.imu_rate))
    rng_idx = np.arange(tick, n_steps + 1, tick)
    delivered = rngs["range"].random(rng_idx.size) < cfg.schedule.range_delivery
    range_noise = math.sqrt(noise.sigma2_range) \
        * rngs["range"].standard_normal(rng_idx.size)
    tx_at = _transmitter_track(traj, rngs["transmitter"])
    kept_idx = rng_idx[delivered]
    kept_noise = range_noise[delivered]
    for j, (i, st) in enumerate(zip(kept_idx, traj.states_at(kept_idx))):
        t = float(traj.times[i])
        tx = tx_at(t)
        r = predict_range(st, arms.range, tx, ell)
        out.append(RangeMeasurement(t, r + float(kept_noise[j]), tx))

    out.sort(key=lambda m: m.timestamp)
    return out


@dataclass
class SimulatedMission:
    config: MissionConfig
    trajectory: Trajectory
    imu: ImuStream
    measurements: list[Measurement]

    @property
    def injected_outliers(self) -> int:
        return sum(1 for m in self.measurements
                   if isinstance(m, DvlMeasurement) and m.outlier)


def simulate_mission(cfg: MissionConfig) -> SimulatedMission:
    """Full deterministic mission: truth, IMU stream, measurement stream."""
    rngs = _mission_rngs(cfg.seed)
    traj = generate_trajectory(cfg)
    imu = synthesize_imu(traj, cfg, rngs["imu"])
    meas = synthesize_measurements(traj, cfg, rngs)
    return SimulatedMission(cfg, traj, imu, meas)
