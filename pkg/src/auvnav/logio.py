"""JSON Lines log encoding/decoding for sensor streams and state traces.

One JSON object per line, UTF-8, fields in SI units with angles in radians:

    {"t": 12.34, "kind": "imu", "w": [..3], "f": [..3]}
    {"t": ...,   "kind": "dvl", "v": [..3]}            (+ "outlier": true)
    {"t": ...,   "kind": "depth", "d": ...}
    {"t": ...,   "kind": "gps", "pos": [lat, lon, alt]}
    {"t": ...,   "kind": "range", "r": ..., "tx": [lat, lon, alt]}
    {"t": ...,   "kind": "truth" | "estimate",
     "att": [..9 row-major], "vel": [..3], "pos": [..3],
     "bg": [..3], "ba": [..3]}                          (+ "pdiag": [..15])
    {"t": ...,   "kind": "verdict", "sensor": ..., "result": ...}

Timestamps must be non-decreasing within a file.
"""
from __future__ import annotations

import json
from typing import IO, Iterable, Iterator

import numpy as np

from .errors import LogFormatError
from .geodesy import CurvilinearPosition
from .sensors import (DepthMeasurement, DvlMeasurement, GpsMeasurement,
                      Measurement, RangeMeasurement)
from .strapdown import ImuSample, NavState

KINDS = ("imu", "dvl", "depth", "gps", "range", "truth", "estimate",
         "verdict")


def encode_imu(sample: ImuSample) -> dict:
    return {"t": sample.timestamp, "kind": "imu",
            "w": sample.angular_rate.tolist(),
            "f": sample.specific_force.tolist()}


def encode_measurement(meas: Measurement) -> dict:
    if isinstance(meas, DvlMeasurement):
        rec = {"t": meas.timestamp, "kind": "dvl",
               "v": np.asarray(meas.velocity).tolist()}
        if meas.outlier:
            rec["outlier"] = True
        return rec
    if isinstance(meas, DepthMeasurement):
        return {"t": meas.timestamp, "kind": "depth", "d": float(meas.depth)}
    if isinstance(meas, GpsMeasurement):
        return {"t": meas.timestamp, "kind": "gps",
                "pos": meas.position.as_array().tolist()}
    if isinstance(meas, RangeMeasurement):
        return {"t": meas.timestamp, "kind": "range",
                "r": float(meas.range_m),
                "tx": meas.transmitter.as_array().tolist()}
    raise TypeError("unsupported measurement type %r" % type(meas).__name__)


def encode_state(t: float, kind: str, state: NavState,
                 pdiag: np.ndarray | None = None) -> dict:
    rec = {"t": t, "kind": kind,
           "att": state.attitude.reshape(9).tolist(),
           "vel": state.velocity.tolist(),
           "pos": state.position.as_array().tolist(),
           "bg": state.gyro_bias.tolist(),
           "ba": state.accel_bias.tolist()}
    if pdiag is not None:
        rec["pdiag"] = np.asarray(pdiag).tolist()
    return rec


def encode_verdict(t: float, sensor: str, result: str) -> dict:
    return {"t": t, "kind": "verdict", "sensor": sensor, "result": result}


def write_records(fh: IO[str], records: Iterable[dict]):
    for rec in records:
        fh.write(json.dumps(rec, separators=(",", ":")))
        fh.write("\n")


def _field(obj: dict, name: str, line: int):
    try:
        return obj[name]
    except KeyError:
        raise LogFormatError("record is missing field %r" % name,
                             line=line) from None


def _vec(obj: dict, name: str, size: int, line: int) -> np.ndarray:
    raw = _field(obj, name, line)
    if not isinstance(raw, list) or len(raw) != size:
        raise LogFormatError("field %r must be a list of %d numbers"
                             % (name, size), line=line)
    try:
        return np.array([float(x) for x in raw])
    except (TypeError, ValueError):
        raise LogFormatError("field %r must be numeric" % name,
                             line=line) from None


def decode_record(obj: dict, line: int):
    """Typed event from a parsed JSON object: (t, kind, payload).

    The payload is an ImuSample or Measurement for sensor kinds, a dict for
    truth/estimate/verdict records.
    """
    if not isinstance(obj, dict):
        raise LogFormatError("each line must be a JSON object", line=line)
    kind = _field(obj, "kind", line)
    if kind not in KINDS:
        raise LogFormatError("unknown record kind %r" % kind, line=line)
    try:
        t = float(_field(obj, "t", line))
    except (TypeError, ValueError):
        raise LogFormatError("field 't' must be numeric", line=line) from None
    if kind == "imu":
        payload = ImuSample(t, _vec(obj, "w", 3, line),
                            _vec(obj, "f", 3, line))
    elif kind == "dvl":
        payload = DvlMeasurement(t, _vec(obj, "v", 3, line),
                                 outlier=bool(obj.get("outlier", False)))
    elif kind == "depth":
        payload = DepthMeasurement(t, float(_field(obj, "d", line)))
    elif kind == "gps":
        pos = _vec(obj, "pos", 3, line)
        try:
            payload = GpsMeasurement(t, CurvilinearPosition.from_array(pos))
        except ValueError as e:
            raise LogFormatError(str(e), line=line) from None
    elif kind == "range":
        tx = _vec(obj, "tx", 3, line)
        try:
            payload = RangeMeasurement(t, float(_field(obj, "r", line)),
                                       CurvilinearPosition.from_array(tx))
        except ValueError as e:
            raise LogFormatError(str(e), line=line) from None
    elif kind in ("truth", "estimate"):
        payload = {"att": _vec(obj, "att", 9, line),
                   "vel": _vec(obj, "vel", 3, line),
                   "pos": _vec(obj, "pos", 3, line)}
        if "bg" in obj:
            payload["bg"] = _vec(obj, "bg", 3, line)
        if "ba" in obj:
            payload["ba"] = _vec(obj, "ba", 3, line)
        if "pdiag" in obj:
            payload["pdiag"] = _vec(obj, "pdiag", 15, line)
    else:
        payload = {"sensor": str(_field(obj, "sensor", line)),
                   "result": str(_field(obj, "result", line))}
    return t, kind, payload


def read_records(fh: IO[str]) -> Iterator[tuple[float, str, object]]:
    """Stream typed records, enforcing non-decreasing timestamps.

    Raises LogFormatError with the offending line number on malformed input.
    """
    last_t = None
    for line_no, line in enumerate(fh, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as e:
            raise LogFormatError("invalid JSON: %s" % e.msg,
                                 line=line_no) from None
        t, kind, payload = decode_record(obj, line_no)
        if last_t is not None and t < last_t:
            raise LogFormatError(
                "timestamp %r decreases (previous %r)" % (t, last_t),
                line=line_no)
        last_t = t
        yield t, kind, payload
