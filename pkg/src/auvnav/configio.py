"""Plain-text configuration files: one ``key = value`` assignment per line.

Keys are dotted paths mirroring the mission/filter dataclass fields, values
are scalars, ``true``/``false``, or comma-separated 3-vectors. Blank lines
and ``#`` comments are ignored. Unknown keys and duplicate assignments are
errors (with line numbers), so typos fail loudly instead of silently using a
default.
"""
from __future__ import annotations

from dataclasses import dataclass
import math

from .errors import ConfigError
from .geodesy import CurvilinearPosition
from .sensors import LeverArm, LeverArmSet, NoiseConfig
from .simulator import (FigureEightSpec, LawnmowerSpec, MissionConfig,
                        OutlierSpec, SensorSchedule)
from .ukfm import FilterConfig

_SCHEMA = {
    "mission.seed": "int",
    "mission.imu_rate": "float",
    "mission.origin_lat_deg": "float",
    "mission.origin_lon_deg": "float",
    "mission.origin_alt": "float",
    "mission.initial_hold": "float",
    "mission.transition_time": "float",
    "mission.surface_hold": "float",
    "mission.gyro_bias": "vec3",
    "mission.accel_bias": "vec3",
    "mission.figure_eight.enabled": "bool",
    "mission.figure_eight.radius": "float",
    "mission.figure_eight.period": "float",
    "mission.figure_eight.duration": "float",
    "mission.lawnmower.enabled": "bool",
    "mission.lawnmower.swath_length": "float",
    "mission.lawnmower.swath_spacing": "float",
    "mission.lawnmower.swath_count": "int",
    "mission.lawnmower.speed": "float",
    "mission.lawnmower.depth": "float",
    "mission.lawnmower.turn_blend": "float",
    "mission.schedule.dvl_rate": "float",
    "mission.schedule.depth_rate": "float",
    "mission.schedule.gps_rate": "float",
    "mission.schedule.range_period": "float",
    "mission.schedule.range_delivery": "float",
    "mission.outliers.rate": "float",
    "mission.outliers.magnitude": "float",
    "mission.outliers.start_time": "float",
    "lever_arms.dvl": "vec3",
    "lever_arms.depth": "vec3",
    "lever_arms.range": "vec3",
    "lever_arms.gps": "vec3",
    "noise.sigma2_gyro": "float",
    "noise.sigma2_accel": "float",
    "noise.sigma2_dvl": "float",
    "noise.sigma2_depth": "float",
    "noise.sigma2_gps": "float",
    "noise.sigma2_range": "float",
    "noise.h_sea": "float",
    "filter.alpha_sq": "float",
    "filter.q_gyro": "float",
    "filter.q_accel": "float",
    "filter.q_gyro_bias": "float",
    "filter.q_accel_bias": "float",
    "filter.p0_att_std_deg": "vec3",
    "filter.p0_vel_std": "float",
    "filter.p0_pos_horiz_std": "float",
    "filter.p0_pos_vert_std": "float",
    "filter.p0_gyro_bias_std": "float",
    "filter.p0_accel_bias_std": "float",
    "filter.gate_dvl": "float",
    "filter.gate_depth": "float",
    "filter.gate_gps": "float",
    "filter.gate_range": "float",
    "filter.gate_warmup": "int",
    "filter.use_dvl": "bool",
    "filter.use_depth": "bool",
    "filter.use_gps": "bool",
    "filter.use_range": "bool",
    "filter.max_imu_age": "float",
    "replay.initial_heading_deg": "float",
    "replay.trace_rate": "float",
}


@dataclass
class ReplayOptions:
    initial_heading_deg: float | None = None
    trace_rate: float = 10.0


def _parse_value(tag: str, text: str, line: int):
    text = text.strip()
    try:
        if tag == "int":
            return int(text)
        if tag == "float":
            return float(text)
        if tag == "bool":
            low = text.lower()
            if low in ("true", "false"):
                return low == "true"
            raise ValueError
        parts = [p.strip() for p in text.split(",")]
        if len(parts) != 3:
            raise ValueError
        return tuple(float(p) for p in parts)
    except ValueError:
        raise ConfigError("cannot parse %r as %s" % (text, tag),
                          line=line) from None


def parse_config_text(text: str) -> dict:
    """Flat key -> typed value dict from config file contents."""
    flat: dict = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("expected 'key = value'", line=line_no)
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in _SCHEMA:
            raise ConfigError("unknown key %r" % key, line=line_no)
        if key in flat:
            raise ConfigError("duplicate key %r" % key, line=line_no)
        flat[key] = _parse_value(_SCHEMA[key], value, line_no)
    return flat


def _kwargs(flat: dict, prefix: str, names: tuple) -> dict:
    return {n: flat[prefix + n] for n in names if prefix + n in flat}


def build_configs(flat: dict) -> tuple[MissionConfig, FilterConfig,
                                       ReplayOptions]:
    """Mission/filter/replay configuration from a parsed key dict."""
    noise = NoiseConfig(**_kwargs(flat, "noise.", (
        "sigma2_gyro", "sigma2_accel", "sigma2_dvl", "sigma2_depth",
        "sigma2_gps", "sigma2_range", "h_sea")))
    arm_kw = {}
    for name in ("dvl", "depth", "range", "gps"):
        key = "lever_arms." + name
        if key in flat:
            arm_kw[name] = LeverArm(flat[key])
    arms = LeverArmSet(**arm_kw)

    fig8 = None
    if flat.get("mission.figure_eight.enabled", True):
        fig8 = FigureEightSpec(**_kwargs(flat, "mission.figure_eight.",
                                         ("radius", "period", "duration")))
    lawn = None
    if flat.get("mission.lawnmower.enabled", True):
        lawn = LawnmowerSpec(**_kwargs(flat, "mission.lawnmower.",
                                       ("swath_length", "swath_spacing",
                                        "swath_count", "speed", "depth",
                                        "turn_blend")))
    schedule = SensorSchedule(**_kwargs(flat, "mission.schedule.",
                                        ("dvl_rate", "depth_rate", "gps_rate",
                                         "range_period", "range_delivery")))
    outliers = OutlierSpec(**_kwargs(flat, "mission.outliers.",
                                     ("rate", "magnitude", "start_time")))
    origin = CurvilinearPosition(
        math.radians(flat.get("mission.origin_lat_deg", 42.3)),
        math.radians(flat.get("mission.origin_lon_deg", -83.7)),
        flat.get("mission.origin_alt", 0.0))
    mission_kw = _kwargs(flat, "mission.", (
        "seed", "imu_rate", "initial_hold", "transition_time", "surface_hold",
        "gyro_bias", "accel_bias"))
    mission = MissionConfig(origin=origin, figure_eight=fig8, lawnmower=lawn,
                            schedule=schedule, outliers=outliers,
                            lever_arms=arms, noise=noise, **mission_kw)

    filt_kw = _kwargs(flat, "filter.", (
        "alpha_sq", "q_gyro", "q_accel", "q_gyro_bias", "q_accel_bias",
        "p0_vel_std", "p0_pos_horiz_std", "p0_pos_vert_std",
        "p0_gyro_bias_std", "p0_accel_bias_std", "gate_dvl", "gate_depth",
        "gate_gps", "gate_range", "gate_warmup", "use_dvl", "use_depth",
        "use_gps", "use_range", "max_imu_age"))
    if "filter.p0_att_std_deg" in flat:
        filt_kw["p0_att_std"] = tuple(
            math.radians(x) for x in flat["filter.p0_att_std_deg"])
    filt = FilterConfig(noise=noise, lever_arms=arms, **filt_kw)

    replay = ReplayOptions(
        initial_heading_deg=flat.get("replay.initial_heading_deg"),
        trace_rate=flat.get("replay.trace_rate", 10.0))
    if replay.trace_rate <= 0:
        raise ConfigError("replay.trace_rate must be > 0")
    return mission, filt, replay


def load_config(path: str) -> tuple[MissionConfig, FilterConfig,
                                    ReplayOptions]:
    with open(path, "r", encoding="utf-8") as fh:
        return build_configs(parse_config_text(fh.read()))


def dump_config(mission: MissionConfig, filt: FilterConfig,
                replay: ReplayOptions | None = None) -> str:
    """Config file text reproducing the given configuration."""
    lines = [
        "mission.seed = %d" % mission.seed,
        "mission.imu_rate = %r" % mission.imu_rate,
        "mission.origin_lat_deg = %r" % math.degrees(mission.origin.latitude),
        "mission.origin_lon_deg = %r" % math.degrees(mission.origin.longitude),
        "mission.origin_alt = %r" % mission.origin.altitude,
        "mission.initial_hold = %r" % mission.initial_hold,
        "mission.transition_time = %r" % mission.transition_time,
        "mission.surface_hold = %r" % mission.surface_hold,
        "mission.gyro_bias = %r, %r, %r" % mission.gyro_bias,
        "mission.accel_bias = %r, %r, %r" % mission.accel_bias,
    ]
    fig8 = mission.figure_eight
    lines.append("mission.figure_eight.enabled = %s"
                 % ("true" if fig8 else "false"))
    if fig8:
        lines += ["mission.figure_eight.radius = %r" % fig8.radius,
                  "mission.figure_eight.period = %r" % fig8.period,
                  "mission.figure_eight.duration = %r" % fig8.duration]
    lawn = mission.lawnmower
    lines.append("mission.lawnmower.enabled = %s"
                 % ("true" if lawn else "false"))
    if lawn:
        lines += ["mission.lawnmower.swath_length = %r" % lawn.swath_length,
                  "mission.lawnmower.swath_spacing = %r" % lawn.swath_spacing,
                  "mission.lawnmower.swath_count = %d" % lawn.swath_count,
                  "mission.lawnmower.speed = %r" % lawn.speed,
                  "mission.lawnmower.depth = %r" % lawn.depth,
                  "mission.lawnmower.turn_blend = %r" % lawn.turn_blend]
    sch = mission.schedule
    lines += ["mission.schedule.dvl_rate = %r" % sch.dvl_rate,
              "mission.schedule.depth_rate = %r" % sch.depth_rate,
              "mission.schedule.gps_rate = %r" % sch.gps_rate,
              "mission.schedule.range_period = %r" % sch.range_period,
              "mission.schedule.range_delivery = %r" % sch.range_delivery,
              "mission.outliers.rate = %r" % mission.outliers.rate,
              "mission.outliers.magnitude = %r" % mission.outliers.magnitude,
              "mission.outliers.start_time = %r"
              % mission.outliers.start_time]
    for name in ("dvl", "depth", "range", "gps"):
        arm = getattr(mission.lever_arms, name)
        lines.append("lever_arms.%s = %r, %r, %r"
                     % ((name,) + tuple(float(x) for x in arm.offset)))
    nz = mission.noise
    lines += ["noise.sigma2_gyro = %r" % nz.sigma2_gyro,
              "noise.sigma2_accel = %r" % nz.sigma2_accel,
              "noise.sigma2_dvl = %r" % nz.sigma2_dvl,
              "noise.sigma2_depth = %r" % nz.sigma2_depth,
              "noise.sigma2_gps = %r" % nz.sigma2_gps,
              "noise.sigma2_range = %r" % nz.sigma2_range,
              "noise.h_sea = %r" % nz.h_sea,
              "filter.alpha_sq = %r" % filt.alpha_sq]
    if filt.q_gyro is not None:
        lines.append("filter.q_gyro = %r" % filt.q_gyro)
    if filt.q_accel is not None:
        lines.append("filter.q_accel = %r" % filt.q_accel)
    lines += ["filter.q_gyro_bias = %r" % filt.q_gyro_bias,
              "filter.q_accel_bias = %r" % filt.q_accel_bias,
              "filter.p0_att_std_deg = %r, %r, %r"
              % tuple(math.degrees(x) for x in filt.p0_att_std),
              "filter.p0_vel_std = %r" % filt.p0_vel_std]
    if filt.p0_pos_horiz_std is not None:
        lines.append("filter.p0_pos_horiz_std = %r" % filt.p0_pos_horiz_std)
    lines += ["filter.p0_pos_vert_std = %r" % filt.p0_pos_vert_std,
              "filter.p0_gyro_bias_std = %r" % filt.p0_gyro_bias_std,
              "filter.p0_accel_bias_std = %r" % filt.p0_accel_bias_std,
              "filter.gate_dvl = %r" % filt.gate_dvl,
              "filter.gate_depth = %r" % filt.gate_depth,
              "filter.gate_gps = %r" % filt.gate_gps,
              "filter.gate_range = %r" % filt.gate_range,
              "filter.gate_warmup = %d" % filt.gate_warmup,
              "filter.use_dvl = %s" % ("true" if filt.use_dvl else "false"),
              "filter.use_depth = %s"
              % ("true" if filt.use_depth else "false"),
              "filter.use_gps = %s" % ("true" if filt.use_gps else "false"),
              "filter.use_range = %s"
              % ("true" if filt.use_range else "false"),
              "filter.max_imu_age = %r" % filt.max_imu_age]
    if replay is not None:
        if replay.initial_heading_deg is not None:
            lines.append("replay.initial_heading_deg = %r"
                         % replay.initial_heading_deg)
        lines.append("replay.trace_rate = %r" % replay.trace_rate)
    return "\n".join(lines) + "\n"
