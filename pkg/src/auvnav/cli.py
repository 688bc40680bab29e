"""Command-line front end: simulate missions, replay logs, compare traces.

    auvnav simulate --config mission.cfg --out run/
    auvnav replay --log run/sensors.jsonl --config mission.cfg --out run/ \
        [--initial-heading-deg 90]
    auvnav compare --estimate run/estimate.jsonl --truth run/truth.jsonl \
        --out run/

Exit codes: 0 success, 1 validation error (config, log format, filter
domain), 2 I/O error. NAV_LOG_LEVEL in {error, warn, info, debug} controls
logging verbosity.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from .configio import load_config
from .errors import NavError
from .logio import encode_measurement, write_records
from .replay import (StateTrace, compare, heading_convergence_time,
                     load_events, load_state_trace, path_length, replay,
                     run_report, RunReport)
from .simulator import SimulatedMission, mission_duration, simulate_mission

logger = logging.getLogger(__name__)

_LOG_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING,
               "info": logging.INFO, "debug": logging.DEBUG}


def _dump(x: float) -> str:
    return json.dumps(x)


def _write_sensor_log(path: str, sim: SimulatedMission):
    imu = sim.imu
    meas = sim.measurements
    n_m = len(meas)
    with open(path, "w", encoding="utf-8") as fh:
        mi = 0
        for k in range(len(imu)):
            t = float(imu.times[k])
            while mi < n_m and meas[mi].timestamp < t:
                fh.write(json.dumps(encode_measurement(meas[mi]),
                                    separators=(",", ":")))
                fh.write("\n")
                mi += 1
            w = imu.angular_rates[k]
            f = imu.specific_forces[k]
            fh.write('{"t":%s,"kind":"imu","w":[%s,%s,%s],"f":[%s,%s,%s]}\n'
                     % (_dump(t), _dump(w[0]), _dump(w[1]), _dump(w[2]),
                        _dump(f[0]), _dump(f[1]), _dump(f[2])))
        for m in meas[mi:]:
            fh.write(json.dumps(encode_measurement(m), separators=(",", ":")))
            fh.write("\n")
    return len(imu) + n_m


def _write_truth_log(path: str, sim: SimulatedMission):
    traj = sim.trajectory
    bg = list(sim.config.gyro_bias)
    ba = list(sim.config.accel_bias)
    n = len(traj)
    chunk = 20000
    with open(path, "w", encoding="utf-8") as fh:
        for start in range(0, n, chunk):
            idx = np.arange(start, min(start + chunk, n))
            att = traj.attitudes(idx)
            for i, gi in enumerate(idx):
                rec = {"t": float(traj.times[gi]), "kind": "truth",
                       "att": att[i].reshape(9).tolist(),
                       "vel": traj.velocities[gi].tolist(),
                       "pos": traj.positions[gi].tolist(),
                       "bg": bg, "ba": ba}
                fh.write(json.dumps(rec, separators=(",", ":")))
                fh.write("\n")
    return n


def _write_estimate_log(path: str, trace: StateTrace):
    records = []
    for i in range(len(trace)):
        records.append({"t": float(trace.times[i]), "kind": "estimate",
                        "att": trace.attitudes[i].reshape(9).tolist(),
                        "vel": trace.velocities[i].tolist(),
                        "pos": trace.positions[i].tolist(),
                        "bg": trace.gyro_biases[i].tolist(),
                        "ba": trace.accel_biases[i].tolist(),
                        "pdiag": trace.cov_diagonals[i].tolist()})
    for t, sensor, result in trace.verdicts:
        records.append({"t": t, "kind": "verdict", "sensor": sensor,
                        "result": result})
    records.sort(key=lambda r: (r["t"], r["kind"] == "verdict"))
    with open(path, "w", encoding="utf-8") as fh:
        write_records(fh, records)
    return len(records)


def cmd_simulate(args) -> int:
    mission, _, _ = load_config(args.config)
    os.makedirs(args.out, exist_ok=True)
    sensors_path = os.path.join(args.out, "sensors.jsonl")
    truth_path = os.path.join(args.out, "truth.jsonl")
    duration = mission_duration(mission)
    if duration < 1.0 / mission.imu_rate:
        logger.warning("mission duration is zero; writing empty logs")
        open(sensors_path, "w").close()
        open(truth_path, "w").close()
        print("simulated %.1f s: 0 events" % 0.0)
        return 0
    sim = simulate_mission(mission)
    n_sensor = _write_sensor_log(sensors_path, sim)
    n_truth = _write_truth_log(truth_path, sim)
    counts = {"imu": len(sim.imu)}
    for m in sim.measurements:
        k = type(m).__name__.replace("Measurement", "").lower()
        counts[k] = counts.get(k, 0) + 1
    print("simulated %.1f s: %d sensor events (%s), %d truth records"
          % (sim.trajectory.duration, n_sensor,
             ", ".join("%s %d" % kv for kv in sorted(counts.items())),
             n_truth))
    if sim.injected_outliers:
        print("injected %d DVL outliers" % sim.injected_outliers)
    return 0


def cmd_replay(args) -> int:
    _, filt, opts = load_config(args.config)
    heading = args.initial_heading_deg
    if heading is None:
        heading = opts.initial_heading_deg
    events = load_events(args.log)
    result = replay(events, filt, initial_heading_deg=heading,
                    trace_rate=opts.trace_rate)
    os.makedirs(args.out, exist_ok=True)
    est_path = os.path.join(args.out, "estimate.jsonl")
    n = _write_estimate_log(est_path, result.trace)
    report = run_report(result)
    logger.info("wrote %d estimate records to %s", n, est_path)
    print(json.dumps(report.to_dict()))
    return 0


def _counts_from_verdicts(verdicts) -> dict:
    counts: dict = {}
    for _, sensor, result in verdicts:
        per = counts.setdefault(sensor, {"accepted": 0, "rejected": 0,
                                         "dropped": 0})
        if result in per:
            per[result] += 1
    return counts


def cmd_compare(args) -> int:
    est = load_state_trace(args.estimate, "estimate")
    truth = load_state_trace(args.truth, "truth")
    err = compare(est, truth)
    os.makedirs(args.out, exist_ok=True)
    csv_path = os.path.join(args.out, "errors.csv")
    with open(csv_path, "w", encoding="utf-8") as fh:
        fh.write("t,pos_err_m,pos_err_n,pos_err_e,pos_err_d,"
                 "vel_err_ms,heading_err_deg\n")
        for i in range(err.times.size):
            fh.write("%.6f,%.6g,%.6g,%.6g,%.6g,%.6g,%.6g\n"
                     % (err.times[i], err.position_err_m[i],
                        err.position_err_ned[i, 0], err.position_err_ned[i, 1],
                        err.position_err_ned[i, 2], err.velocity_err[i],
                        err.heading_err_deg[i]))
    total = path_length(truth)
    final = float(err.position_err_m[-1])
    report = RunReport(
        duration_s=float(err.times[-1] - err.times[0]),
        counts=_counts_from_verdicts(est.verdicts),
        final_position_error_m=final,
        drift_percent=100.0 * final / total if total > 0 else 0.0,
        heading_convergence_s=heading_convergence_time(
            err.times, err.heading_err_deg))
    report_path = os.path.join(args.out, "report.json")
    with open(report_path, "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, indent=2)
        fh.write("\n")
    print(json.dumps(report.to_dict()))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="auvnav",
        description="Aided inertial navigation: simulate, replay, compare.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate sensor and truth logs")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("replay", help="run the filter over a sensor log")
    p.add_argument("--log", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--initial-heading-deg", type=float, default=None)
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("compare", help="score an estimate trace against truth")
    p.add_argument("--estimate", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    level_name = os.environ.get("NAV_LOG_LEVEL", "warn").lower()
    level = _LOG_LEVELS.get(level_name)
    if level is None:
        level = logging.WARNING
    logging.basicConfig(level=level,
                        format="%(levelname)s %(name)s: %(message)s")
    if level_name not in _LOG_LEVELS:
        logger.warning("unknown NAV_LOG_LEVEL %r; using 'warn'", level_name)
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except OSError as e:
        print("I/O error: %s" % e, file=sys.stderr)
        return 2
    except (NavError, ValueError) as e:
        print("error: %s" % e, file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
