"""Unscented Kalman filtering on the SO(3) x R^12 navigation manifold.

The 15-dim error state is [attitude (rad), velocity (m/s), position (m, NED),
gyro bias, accel bias]; attitude errors retract by left multiplication with
exp(xi) and position errors through the curvilinear scaling evaluated at the
reference state, so the position error coordinates stay in meters.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import logging
import math

import numpy as np

from . import _kernels
from .errors import CovarianceError, RejectedSampleError, StaleImuError
from .geodesy import WGS84, CurvilinearPosition, EllipsoidParams
from .sensors import (DepthMeasurement, DvlMeasurement, GpsMeasurement,
                      LeverArmSet, Measurement, NoiseConfig, RangeMeasurement,
                      gps_noise_cov)
from .so3 import exp_so3
from .strapdown import MAX_DT, ImuSample, NavState

logger = logging.getLogger(__name__)

STATE_DIM = 15
ATT = slice(0, 3)
VEL = slice(3, 6)
POS = slice(6, 9)
GYRO_BIAS = slice(9, 12)
ACCEL_BIAS = slice(12, 15)

SENSOR_KINDS = ("dvl", "depth", "gps", "range")
_MTYPE = {"dvl": 0, "depth": 1, "gps": 2, "range": 3}


@dataclass(frozen=True)
class SigmaWeights:
    """Scaled sigma-point weights: mean wm/wj, covariance adds w0 on center."""

    lam: float
    sqrt_lam: float
    wm: float
    wj: float
    w0: float

    @classmethod
    def for_dim(cls, alpha_sq: float, dim: int = STATE_DIM) -> "SigmaWeights":
        lam = (alpha_sq - 1.0) * dim
        return cls(lam=lam,
                   sqrt_lam=math.sqrt(dim + lam),
                   wm=lam / (dim + lam),
                   wj=1.0 / (2.0 * (dim + lam)),
                   w0=lam / (dim + lam) + 3.0 - alpha_sq)


@dataclass
class FilterConfig:
    """Filter tuning: spread, process noise, initial covariance, gates.

    q_gyro / q_accel default to the IMU noise densities in ``noise``;
    p0_pos_horiz_std defaults to the GPS sigma.
    """

    noise: NoiseConfig = field(default_factory=NoiseConfig)
    lever_arms: LeverArmSet = field(default_factory=LeverArmSet)
    alpha_sq: float = 1e-3
    q_gyro: float | None = None
    q_accel: float | None = None
    q_gyro_bias: float = 1e-12
    q_accel_bias: float = 1e-10
    p0_att_std: tuple[float, float, float] = (
        math.radians(10.0), math.radians(10.0), math.pi)
    p0_vel_std: float = 0.5
    p0_pos_horiz_std: float | None = None
    p0_pos_vert_std: float = 1.0
    p0_gyro_bias_std: float = 1e-3
    p0_accel_bias_std: float = 0.05
    gate_dvl: float = 5.0
    gate_depth: float = 5.0
    gate_gps: float = 5.0
    gate_range: float = 5.0
    gate_warmup: int = 10
    use_dvl: bool = True
    use_depth: bool = True
    use_gps: bool = True
    use_range: bool = True
    max_imu_age: float = 0.5

    def weights(self) -> SigmaWeights:
        return SigmaWeights.for_dim(self.alpha_sq)

    def gate_multiplier(self, kind: str) -> float:
        return {"dvl": self.gate_dvl, "depth": self.gate_depth,
                "gps": self.gate_gps, "range": self.gate_range}[kind]

    def enabled(self, kind: str) -> bool:
        return {"dvl": self.use_dvl, "depth": self.use_depth,
                "gps": self.use_gps, "range": self.use_range}[kind]

    def process_noise(self) -> np.ndarray:
        """Continuous process-noise density on the error state (15x15)."""
        qg = self.noise.sigma2_gyro if self.q_gyro is None else self.q_gyro
        qa = self.noise.sigma2_accel if self.q_accel is None else self.q_accel
        return np.diag([qg] * 3 + [qa] * 3 + [0.0] * 3
                       + [self.q_gyro_bias] * 3 + [self.q_accel_bias] * 3)

    def initial_covariance(self) -> np.ndarray:
        ph = (math.sqrt(self.noise.sigma2_gps)
              if self.p0_pos_horiz_std is None else self.p0_pos_horiz_std)
        stds = list(self.p0_att_std) + [self.p0_vel_std] * 3 \
            + [ph, ph, self.p0_pos_vert_std] \
            + [self.p0_gyro_bias_std] * 3 + [self.p0_accel_bias_std] * 3
        return np.diag(np.square(stds))


def retract(state: NavState, xi: np.ndarray,
            ellipsoid: EllipsoidParams = WGS84) -> NavState:
    """Apply a 15-dim tangent vector to a state (phi in the filter sense)."""
    xi = np.asarray(xi, dtype=float)
    if xi.shape != (STATE_DIM,):
        raise ValueError("tangent vector must be length %d" % STATE_DIM)
    c = state.attitude.copy()
    v = state.velocity.copy()
    p = state.position.as_array()
    bg = state.gyro_bias.copy()
    ba = state.accel_bias.copy()
    _kernels.retract_inplace(c, v, p, bg, ba, xi,
                             _kernels.earth_array(ellipsoid))
    return NavState(c, v, CurvilinearPosition.from_array(p), bg, ba)


def inverse_retract(state: NavState, other: NavState,
                    ellipsoid: EllipsoidParams = WGS84) -> np.ndarray:
    """Tangent coordinates of ``other`` relative to ``state``.

    Exact inverse of :func:`retract` at the same reference state.
    """
    return _kernels.inverse_retract_arrays(
        state.attitude, state.velocity, state.position.as_array(),
        state.gyro_bias, state.accel_bias,
        other.attitude, other.velocity, other.position.as_array(),
        other.gyro_bias, other.accel_bias,
        _kernels.earth_array(ellipsoid))


def sigma_points(state: NavState, P: np.ndarray, cfg: FilterConfig,
                 ellipsoid: EllipsoidParams = WGS84
                 ) -> tuple[list[NavState], SigmaWeights]:
    """The 2*15+1 sigma states (center first) and their weights.

    Raises
    ------
    CovarianceError
        If P has lost positive definiteness.
    """
    w = cfg.weights()
    try:
        s = np.linalg.cholesky(P)
    except np.linalg.LinAlgError as e:
        raise CovarianceError("sigma-point Cholesky failed: %s" % e) from e
    points = [state.copy()]
    for j in range(STATE_DIM):
        points.append(retract(state, w.sqrt_lam * s[:, j], ellipsoid))
    for j in range(STATE_DIM):
        points.append(retract(state, -w.sqrt_lam * s[:, j], ellipsoid))
    return points, w


def predict(state: NavState, P: np.ndarray, sample: ImuSample, dt: float,
            cfg: FilterConfig, ellipsoid: EllipsoidParams = WGS84
            ) -> tuple[NavState, np.ndarray]:
    """Sigma-point prediction through the strapdown model.

    The new mean is the propagated central point; the covariance is rebuilt
    from inverse-retract spreads around it plus Q * dt.
    """
    if not (0.0 < dt <= MAX_DT):
        raise RejectedSampleError("sample interval %r outside (0, %g] s"
                                  % (dt, MAX_DT))
    if not np.allclose(P, P.T, atol=1e-12):
        raise CovarianceError("covariance must be symmetric")
    c = state.attitude.copy()
    v = state.velocity.copy()
    p = state.position.as_array()
    bg = state.gyro_bias.copy()
    ba = state.accel_bias.copy()
    pn = np.array(P, dtype=float)
    w = cfg.weights()
    try:
        _kernels.predict_chunk(
            c, v, p, bg, ba, pn,
            sample.angular_rate.reshape(1, 3),
            sample.specific_force.reshape(1, 3),
            np.array([float(dt)]), cfg.process_noise(),
            w.sqrt_lam, w.wj, w.w0, _kernels.earth_array(ellipsoid))
    except np.linalg.LinAlgError as e:
        raise CovarianceError("prediction Cholesky failed: %s" % e) from e
    return NavState(c, v, CurvilinearPosition.from_array(p), bg, ba), pn


def _wrap_pi(x: float) -> float:
    return (x + math.pi) % (2.0 * math.pi) - math.pi


def _measurement_parts(meas: Measurement, cfg: FilterConfig,
                       position: CurvilinearPosition,
                       ellipsoid: EllipsoidParams):
    """Kernel inputs for one measurement: code, z, lever, aux, padded R."""
    aux = np.zeros(4)
    r = np.zeros((3, 3))
    if isinstance(meas, DvlMeasurement):
        z = np.asarray(meas.velocity, dtype=float)
        lever = cfg.lever_arms.dvl.offset
        r[:3, :3] = np.eye(3) * cfg.noise.sigma2_dvl
        return "dvl", z, lever, aux, r
    if isinstance(meas, DepthMeasurement):
        aux[0] = cfg.noise.h_sea
        r[0, 0] = cfg.noise.sigma2_depth
        return "depth", np.array([float(meas.depth)]), cfg.lever_arms.depth.offset, aux, r
    if isinstance(meas, GpsMeasurement):
        r[:3, :3] = gps_noise_cov(cfg.noise, position, ellipsoid)
        return "gps", meas.position.as_array(), cfg.lever_arms.gps.offset, aux, r
    if isinstance(meas, RangeMeasurement):
        aux[1:4] = meas.transmitter.as_array()
        r[0, 0] = cfg.noise.sigma2_range
        return "range", np.array([float(meas.range_m)]), cfg.lever_arms.range.offset, aux, r
    raise TypeError("unsupported measurement type %r" % type(meas).__name__)


def gate_threshold(p_yy: np.ndarray, multiplier: float) -> float:
    """Innovation gate: multiplier * sqrt(||diag(P_yy)||_2)."""
    return multiplier * math.sqrt(float(np.linalg.norm(np.diag(p_yy))))


def _update_arrays(c, v, p, bg, ba, P, meas, cfg, w_imu, bypass_gate,
                   earth, ellipsoid):
    """Measurement update on raw state arrays.

    Mutates (c, v, p, bg, ba) and returns (accepted, P_new) when the gate
    passes; leaves everything untouched and returns (False, None) otherwise.
    """
    kind, z, lever, aux, r = _measurement_parts(
        meas, cfg, CurvilinearPosition.from_array(p), ellipsoid)
    w = cfg.weights()
    m = z.shape[0]
    try:
        yb, pyy, pxy = _kernels.measure_sigma(
            c, v, p, bg, ba, P, _MTYPE[kind], lever, w_imu, aux, r,
            w.sqrt_lam, w.wm, w.wj, w.w0, earth)
    except np.linalg.LinAlgError as e:
        raise CovarianceError("update Cholesky failed: %s" % e) from e
    dz = z - yb[:m]
    if kind == "gps":
        dz[1] = _wrap_pi(dz[1])
    pyy_m = pyy[:m, :m]
    if not bypass_gate:
        thresh = gate_threshold(pyy_m, cfg.gate_multiplier(kind))
        if np.any(np.abs(dz) > thresh):
            return False, None
    k = np.linalg.solve(pyy_m, pxy[:, :m].T).T
    xi = k @ dz
    p_new = P - k @ pyy_m @ k.T
    p_new = 0.5 * (p_new + p_new.T)
    _kernels.retract_inplace(c, v, p, bg, ba, xi, earth)
    return True, p_new


def update(state: NavState, P: np.ndarray, meas: Measurement,
           cfg: FilterConfig, latest_imu: ImuSample | None,
           bypass_gate: bool = False,
           ellipsoid: EllipsoidParams = WGS84
           ) -> tuple[NavState, np.ndarray, str]:
    """Sigma-point measurement update with innovation gating.

    Returns the input (state, P) objects untouched with verdict "rejected"
    when the gate trips.

    Raises
    ------
    StaleImuError
        If the newest IMU sample predates the measurement by more than
        ``cfg.max_imu_age`` (the DVL model needs a current body rate).
    """
    if latest_imu is None or (meas.timestamp - latest_imu.timestamp
                              > cfg.max_imu_age):
        raise StaleImuError("no IMU sample within %g s of the measurement"
                            % cfg.max_imu_age)
    c = state.attitude.copy()
    v = state.velocity.copy()
    p = state.position.as_array()
    bg = state.gyro_bias.copy()
    ba = state.accel_bias.copy()
    accepted, p_new = _update_arrays(
        c, v, p, bg, ba, np.array(P, dtype=float), meas, cfg,
        latest_imu.angular_rate, bypass_gate,
        _kernels.earth_array(ellipsoid), ellipsoid)
    if not accepted:
        return state, P, "rejected"
    return (NavState(c, v, CurvilinearPosition.from_array(p), bg, ba),
            p_new, "accepted")


def initialize(first_gps: GpsMeasurement, cfg: FilterConfig,
               initial_heading: float | None = None
               ) -> tuple[NavState, np.ndarray]:
    """State and covariance from the first GPS fix.

    Everything but position starts at zero; ``initial_heading`` (rad) seeds
    the attitude as a pure heading rotation when given.
    """
    if initial_heading is None:
        att = np.eye(3)
    else:
        att = exp_so3(np.array([0.0, 0.0, float(initial_heading)]))
    state = NavState(att, np.zeros(3), first_gps.position,
                     np.zeros(3), np.zeros(3))
    return state, cfg.initial_covariance()


def nees(state: NavState, P: np.ndarray, truth: NavState,
         ellipsoid: EllipsoidParams = WGS84) -> float:
    """Normalized estimation error squared of truth under (state, P)."""
    xi = inverse_retract(state, truth, ellipsoid)
    return float(xi @ np.linalg.solve(P, xi))


class NavFilter:
    """Streaming front end: consumes IMU blocks and measurements in time order.

    Keeps the per-sensor accept/reject counters that drive the gate warmup
    (the gate is bypassed until ``gate_warmup`` measurements of that sensor
    have been accepted).
    """

    def __init__(self, cfg: FilterConfig | None = None,
                 ellipsoid: EllipsoidParams = WGS84):
        self.cfg = cfg if cfg is not None else FilterConfig()
        self._ellipsoid = ellipsoid
        self._earth = _kernels.earth_array(ellipsoid)
        self._weights = self.cfg.weights()
        self._q = self.cfg.process_noise()
        self.time: float | None = None
        self.counts = {k: {"accepted": 0, "rejected": 0, "dropped": 0}
                       for k in SENSOR_KINDS}
        self._c = None
        self._v = None
        self._p = None
        self._bg = None
        self._ba = None
        self._P = None
        self._imu_w = np.zeros(3)

    @property
    def initialized(self) -> bool:
        return self._c is not None

    def initialize_from_gps(self, gps: GpsMeasurement,
                            initial_heading: float | None = None):
        state, p0 = initialize(gps, self.cfg, initial_heading)
        self.set_state(state, p0, gps.timestamp)
        self.counts["gps"]["accepted"] += 1

    def set_state(self, state: NavState, P: np.ndarray, t: float):
        self._c = np.array(state.attitude, dtype=float)
        self._v = np.array(state.velocity, dtype=float)
        self._p = state.position.as_array()
        self._bg = np.array(state.gyro_bias, dtype=float)
        self._ba = np.array(state.accel_bias, dtype=float)
        self._P = np.array(P, dtype=float)
        self.time = float(t)

    def snapshot(self) -> tuple[NavState, np.ndarray]:
        state = NavState(self._c.copy(), self._v.copy(),
                         CurvilinearPosition.from_array(self._p),
                         self._bg.copy(), self._ba.copy())
        return state, self._P.copy()

    def predict_block(self, ts: np.ndarray, ws: np.ndarray, fs: np.ndarray):
        """Run the prediction over consecutive IMU samples (row arrays)."""
        n = ts.shape[0]
        if n == 0:
            return
        dts = np.empty(n)
        dts[0] = ts[0] - self.time
        if n > 1:
            dts[1:] = np.diff(ts)
        if dts.min() <= 0.0 or dts.max() > MAX_DT:
            raise RejectedSampleError(
                "IMU intervals outside (0, %g] s near t=%.3f" % (MAX_DT, ts[0]))
        try:
            _kernels.predict_chunk(self._c, self._v, self._p, self._bg,
                                   self._ba, self._P, ws, fs, dts, self._q,
                                   self._weights.sqrt_lam, self._weights.wj,
                                   self._weights.w0, self._earth)
        except np.linalg.LinAlgError as e:
            raise CovarianceError("prediction Cholesky failed at t=%.3f: %s"
                                  % (ts[0], e)) from e
        self.time = float(ts[-1])
        self._imu_w = ws[-1]

    def process_imu(self, sample: ImuSample):
        self.predict_block(np.array([sample.timestamp]),
                           sample.angular_rate.reshape(1, 3),
                           sample.specific_force.reshape(1, 3))

    def process_measurement(self, meas: Measurement) -> str | None:
        """Apply one measurement; returns the verdict or None when dropped."""
        kind = measurement_kind(meas)
        if not self.cfg.enabled(kind):
            return None
        if abs(meas.timestamp - self.time) > self.cfg.max_imu_age:
            logger.warning("dropping %s measurement at t=%.3f (filter at %.3f)",
                           kind, meas.timestamp, self.time)
            self.counts[kind]["dropped"] += 1
            return None
        bypass = self.counts[kind]["accepted"] < self.cfg.gate_warmup
        accepted, p_new = _update_arrays(
            self._c, self._v, self._p, self._bg, self._ba, self._P, meas,
            self.cfg, self._imu_w, bypass, self._earth, self._ellipsoid)
        if accepted:
            self._P = p_new
            self.counts[kind]["accepted"] += 1
            return "accepted"
        self.counts[kind]["rejected"] += 1
        return "rejected"


def measurement_kind(meas: Measurement) -> str:
    if isinstance(meas, DvlMeasurement):
        return "dvl"
    if isinstance(meas, DepthMeasurement):
        return "depth"
    if isinstance(meas, GpsMeasurement):
        return "gps"
    if isinstance(meas, RangeMeasurement):
        return "range"
    raise TypeError("unsupported measurement type %r" % type(meas).__name__)
