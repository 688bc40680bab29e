"""Replay logged sensor streams through the filter and score the result.

The engine initializes from the first GPS fix, then walks the measurement
stream in time order, feeding the filter IMU blocks between measurement and
trace-snapshot boundaries (the prediction over a block runs as one compiled
chunk, which is what makes multi-hour missions replay in seconds).
"""
from __future__ import annotations

from dataclasses import dataclass, field
import logging
import math

import numpy as np

from .errors import LogFormatError
from .geodesy import WGS84, EllipsoidParams
from .logio import read_records
from .sensors import GpsMeasurement, Measurement
from .simulator import Trajectory
from .ukfm import FilterConfig, NavFilter, measurement_kind

logger = logging.getLogger(__name__)

ALIGN_WINDOW = 0.1
HEADING_CONVERGED_DEG = 2.0


@dataclass
class EventLog:
    """Sensor events parsed from a log file, IMU as packed arrays."""

    imu_times: np.ndarray
    imu_rates: np.ndarray
    imu_forces: np.ndarray
    measurements: list[Measurement]

    def __len__(self):
        return self.imu_times.shape[0] + len(self.measurements)


@dataclass
class StateTrace:
    """Time series of states (truth or estimates)."""

    times: np.ndarray
    attitudes: np.ndarray
    velocities: np.ndarray
    positions: np.ndarray
    gyro_biases: np.ndarray | None = None
    accel_biases: np.ndarray | None = None
    cov_diagonals: np.ndarray | None = None
    verdicts: list[tuple[float, str, str]] = field(default_factory=list)

    def __len__(self):
        return self.times.shape[0]

    def headings(self) -> np.ndarray:
        return np.arctan2(self.attitudes[:, 1, 0], self.attitudes[:, 0, 0])


def events_from_mission(sim) -> EventLog:
    """EventLog straight from a SimulatedMission, skipping serialization."""
    return EventLog(sim.imu.times, sim.imu.angular_rates,
                    sim.imu.specific_forces, list(sim.measurements))


def load_events(path: str) -> EventLog:
    """Sensor log -> EventLog; truth/estimate records are ignored."""
    ts, ws, fs = [], [], []
    meas: list[Measurement] = []
    with open(path, "r", encoding="utf-8") as fh:
        for t, kind, payload in read_records(fh):
            if kind == "imu":
                ts.append(t)
                ws.append(payload.angular_rate)
                fs.append(payload.specific_force)
            elif kind in ("dvl", "depth", "gps", "range"):
                meas.append(payload)
    n = len(ts)
    return EventLog(np.array(ts), np.array(ws).reshape(n, 3),
                    np.array(fs).reshape(n, 3), meas)


def load_state_trace(path: str, kind: str) -> StateTrace:
    """Truth or estimate records from a log file, packed into arrays."""
    ts, att, vel, pos, bg, ba, pd = [], [], [], [], [], [], []
    verdicts = []
    with open(path, "r", encoding="utf-8") as fh:
        for t, k, payload in read_records(fh):
            if k == "verdict":
                verdicts.append((t, payload["sensor"], payload["result"]))
            elif k == kind:
                ts.append(t)
                att.append(payload["att"])
                vel.append(payload["vel"])
                pos.append(payload["pos"])
                if "bg" in payload:
                    bg.append(payload["bg"])
                    ba.append(payload["ba"])
                if "pdiag" in payload:
                    pd.append(payload["pdiag"])
    if not ts:
        raise LogFormatError("no %r records in %s" % (kind, path))
    n = len(ts)
    return StateTrace(
        np.array(ts), np.array(att).reshape(n, 3, 3), np.array(vel),
        np.array(pos),
        np.array(bg) if len(bg) == n else None,
        np.array(ba) if len(ba) == n else None,
        np.array(pd) if len(pd) == n else None,
        verdicts)


def trace_from_trajectory(traj: Trajectory, stride: int = 1) -> StateTrace:
    idx = np.arange(0, len(traj), stride)
    return StateTrace(traj.times[idx].copy(), traj.attitudes(idx),
                      traj.velocities[idx].copy(), traj.positions[idx].copy())


@dataclass
class ReplayResult:
    trace: StateTrace
    counts: dict
    initialized_at: float | None
    final_time: float | None
    final_covariance: np.ndarray | None = None

    @property
    def verdicts(self):
        return self.trace.verdicts


def replay(events: EventLog, cfg: FilterConfig | None = None,
           initial_heading_deg: float | None = None,
           trace_rate: float = 10.0,
           ellipsoid: EllipsoidParams = WGS84) -> ReplayResult:
    """Run the filter over a parsed event log.

    The filter starts from the first GPS fix (measurements before it are
    dropped); the estimate trace is snapshotted at ``trace_rate``.
    """
    nf = NavFilter(cfg, ellipsoid)
    imu_t = events.imu_times
    heading = None if initial_heading_deg is None \
        else math.radians(initial_heading_deg)
    step = 1.0 / trace_rate
    ts, att, vel, pos, bg, ba, pd = [], [], [], [], [], [], []
    verdicts: list[tuple[float, str, str]] = []
    state = {"i": 0, "next": None}

    def snapshot():
        st, p = nf.snapshot()
        ts.append(nf.time)
        att.append(st.attitude)
        vel.append(st.velocity)
        pos.append(st.position.as_array())
        bg.append(st.gyro_bias)
        ba.append(st.accel_bias)
        pd.append(np.diag(p))

    def advance(target: float):
        i = state["i"]
        while state["next"] is not None and state["next"] <= target:
            j = int(np.searchsorted(imu_t, state["next"], side="right"))
            if j > i:
                nf.predict_block(imu_t[i:j], events.imu_rates[i:j],
                                 events.imu_forces[i:j])
                i = j
            snapshot()
            state["next"] += step
        j = int(np.searchsorted(imu_t, target, side="right"))
        if j > i:
            nf.predict_block(imu_t[i:j], events.imu_rates[i:j],
                             events.imu_forces[i:j])
            i = j
        state["i"] = i

    for meas in events.measurements:
        kind = measurement_kind(meas)
        if not nf.initialized:
            if isinstance(meas, GpsMeasurement) and nf.cfg.enabled(kind):
                nf.initialize_from_gps(meas, heading)
                verdicts.append((meas.timestamp, "gps", "accepted"))
                state["i"] = int(np.searchsorted(imu_t, meas.timestamp,
                                                 side="right"))
                state["next"] = math.ceil(meas.timestamp / step) * step
                snapshot()
            else:
                nf.counts[kind]["dropped"] += 1
                logger.debug("dropping %s at t=%.3f before initialization",
                             kind, meas.timestamp)
            continue
        advance(meas.timestamp)
        verdict = nf.process_measurement(meas)
        if verdict is not None:
            verdicts.append((meas.timestamp, kind, verdict))
    final_time = None
    final_cov = None
    if nf.initialized:
        if imu_t.size and imu_t[-1] > nf.time:
            advance(float(imu_t[-1]))
        snapshot()
        final_time = nf.time
        final_cov = nf.snapshot()[1]
    n = len(ts)
    trace = StateTrace(np.array(ts), np.array(att).reshape(n, 3, 3),
                       np.array(vel).reshape(n, 3),
                       np.array(pos).reshape(n, 3),
                       np.array(bg).reshape(n, 3),
                       np.array(ba).reshape(n, 3),
                       np.array(pd).reshape(n, 15), verdicts)
    return ReplayResult(trace, nf.counts,
                        None if not nf.initialized else float(trace.times[0]),
                        final_time, final_cov)



@dataclass
class ErrorTrace:
    times: np.ndarray
    position_err_m: np.ndarray
    position_err_ned: np.ndarray
    velocity_err: np.ndarray
    heading_err_deg: np.ndarray


@dataclass
class RunReport:
    duration_s: float
    counts: dict
    final_position_error_m: float | None = None
    drift_percent: float | None = None
    heading_convergence_s: float | None = None

    def to_dict(self) -> dict:
        out = {"duration_s": self.duration_s, "counts": self.counts}
        if self.final_position_error_m is not None:
            out["final_position_error_m"] = self.final_position_error_m
            out["drift_percent"] = self.drift_percent
        if self.heading_convergence_s is not None:
            out["heading_convergence_s"] = self.heading_convergence_s
        return out


def _align(est_times: np.ndarray, truth_times: np.ndarray,
           window: float = ALIGN_WINDOW):
    """Nearest truth index per estimate time, masked to the given window."""
    j = np.searchsorted(truth_times, est_times)
    j = np.clip(j, 1, truth_times.size - 1)
    left = np.abs(truth_times[j - 1] - est_times)
    right = np.abs(truth_times[j] - est_times)
    idx = np.where(left <= right, j - 1, j)
    ok = np.abs(truth_times[idx] - est_times) <= window
    return idx, ok


def compare(est: StateTrace, truth: StateTrace,
            ellipsoid: EllipsoidParams = WGS84,
            window: float = ALIGN_WINDOW) -> ErrorTrace:
    """Time-aligned error traces (position m, velocity m/s, heading deg).

    Raises ValueError when the two traces share no overlapping samples.
    """
    idx, ok = _align(est.times, truth.times, window)
    if not np.any(ok):
        raise ValueError("estimate and truth time ranges are disjoint")
    idx = idx[ok]
    tp = truth.positions[idx]
    lat, alt = tp[:, 0], tp[:, 2]
    s2 = np.sin(lat) ** 2
    x = 1.0 - ellipsoid.eccentricity_sq * s2
    rn = ellipsoid.semi_major_axis * (1.0 - ellipsoid.eccentricity_sq) \
        / x ** 1.5
    re = ellipsoid.semi_major_axis / np.sqrt(x)
    dp = est.positions[ok] - tp
    ned = np.stack([dp[:, 0] * (rn + alt),
                    dp[:, 1] * (re + alt) * np.cos(lat),
                    -dp[:, 2]], axis=1)
    verr = np.linalg.norm(est.velocities[ok] - truth.velocities[idx], axis=1)
    dpsi = est.headings()[ok] - truth.headings()[idx]
    dpsi = (dpsi + math.pi) % (2.0 * math.pi) - math.pi
    return ErrorTrace(est.times[ok], np.linalg.norm(ned, axis=1), ned, verr,
                      np.degrees(np.abs(dpsi)))


def path_length(truth: StateTrace) -> float:
    """Distance traveled: trapezoidal integral of truth speed."""
    speed = np.linalg.norm(truth.velocities, axis=1)
    return float(np.trapezoid(speed, truth.times))


def heading_convergence_time(times: np.ndarray, heading_err_deg: np.ndarray,
                             threshold: float = HEADING_CONVERGED_DEG
                             ) -> float | None:
    """First time the heading error drops below threshold and stays there."""
    bad = heading_err_deg >= threshold
    if not bad.any():
        return float(times[0])
    last_bad = int(np.nonzero(bad)[0][-1])
    if last_bad == times.size - 1:
        return None
    return float(times[last_bad + 1])


def run_report(result: ReplayResult, truth: StateTrace | None = None,
               ellipsoid: EllipsoidParams = WGS84) -> RunReport:
    """Summary metrics; error fields need a truth trace."""
    trace = result.trace
    duration = 0.0
    if len(trace) and result.initialized_at is not None:
        duration = float(trace.times[-1] - trace.times[0])
    report = RunReport(duration, result.counts)
    if truth is not None and len(trace):
        err = compare(trace, truth, ellipsoid)
        report.final_position_error_m = float(err.position_err_m[-1])
        total = path_length(truth)
        report.drift_percent = (100.0 * report.final_position_error_m / total
                                if total > 0 else 0.0)
        report.heading_convergence_s = heading_convergence_time(
            err.times, err.heading_err_deg)
    return report
