"""Measurement / calibration container.

Layout::

    VEGSCAN 1\\n
    {json header, sorted keys}\\n
    n_points x (real, imag) little-endian float64

Header keys: rx_id, distance_m, azimuth_deg, elevation_deg, f_start_hz,
f_step_hz, n_points.  Calibration files use rx_id "OTA" and add d_ota_m.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .errors import ParseError
from .sounder import CalibrationScan, FrequencyScan

MAGIC = b"VEGSCAN 1\n"
OTA_ID = "OTA"
SUFFIX = ".scan"
_HEADER_KEYS = {"rx_id", "distance_m", "azimuth_deg", "elevation_deg", "f_start_hz", "f_step_hz", "n_points"}


def _encode(header: dict, samples: np.ndarray) -> bytes:
    payload = np.empty(2 * samples.size, dtype="<f8")
    payload[0::2] = samples.real
    payload[1::2] = samples.imag
    head = json.dumps(header, sort_keys=True, allow_nan=True).encode()
    return MAGIC + head + b"\n" + payload.tobytes()


def encode_scan(scan: FrequencyScan) -> bytes:
    header = {
        "rx_id": scan.rx_id,
        "distance_m": float(scan.distance),
        "azimuth_deg": scan.azimuth,
        "elevation_deg": scan.elevation,
        "f_start_hz": float(scan.f_start),
        "f_step_hz": float(scan.f_step),
        "n_points": scan.n,
    }
    return _encode(header, scan.samples)


def encode_calibration(cal: CalibrationScan) -> bytes:
    header = {
        "rx_id": OTA_ID,
        "distance_m": float(cal.d_ota),
        "d_ota_m": float(cal.d_ota),
        "azimuth_deg": 0.0,
        "elevation_deg": 0.0,
        "f_start_hz": float(cal.f_start),
        "f_step_hz": float(cal.f_step),
        "n_points": cal.n,
    }
    return _encode(header, cal.samples)


def _decode(data: bytes, source: str):
    if not data.startswith(MAGIC):
        raise ParseError("not a scan file (bad magic)", source, 1)
    end = data.find(b"\n", len(MAGIC))
    if end < 0:
        raise ParseError("truncated header", source, 2)
    try:
        header = json.loads(data[len(MAGIC):end].decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ParseError(f"bad header: {exc}", source, 2) from None
    if not isinstance(header, dict):
        raise ParseError("header must be an object", source, 2)
    missing = _HEADER_KEYS - header.keys()
    if missing:
        raise ParseError(f"header missing {sorted(missing)}", source, 2)
    unknown = header.keys() - _HEADER_KEYS - {"d_ota_m"}
    if unknown:
        raise ParseError(f"unknown header keys {sorted(unknown)}", source, 2)
    n = header["n_points"]
    if not isinstance(n, int) or isinstance(n, bool) or n < 2:
        raise ParseError(f"n_points must be an integer >= 2, got {n!r}", source, 2)
    f_start, f_step = header["f_start_hz"], header["f_step_hz"]
    if not all(isinstance(v, (int, float)) and math.isfinite(v) for v in (f_start, f_step)):
        raise ParseError("frequency grid must be finite numbers", source, 2)
    if not f_step > 0:
        raise ParseError("frequency grid is not increasing (f_step_hz <= 0)", source, 2)
    payload = data[end + 1:]
    if len(payload) != 16 * n:
        raise ParseError(f"payload holds {len(payload) / 16:g} points, header says {n}", source)
    raw = np.frombuffer(payload, dtype="<f8")
    samples = raw[0::2] + 1j * raw[1::2]
    return header, samples


def decode_scan(data: bytes, source: str = "<scan>") -> FrequencyScan:
    header, samples = _decode(data, source)
    return FrequencyScan(float(header["f_start_hz"]), float(header["f_step_hz"]), samples,
                         (float(header["azimuth_deg"]), float(header["elevation_deg"])),
                         str(header["rx_id"]), float(header["distance_m"]))


def decode_calibration(data: bytes, source: str = "<cal>") -> CalibrationScan:
    header, samples = _decode(data, source)
    if header["rx_id"] != OTA_ID or "d_ota_m" not in header:
        raise ParseError(f"calibration file needs rx_id {OTA_ID!r} and d_ota_m", source, 2)
    return CalibrationScan(float(header["f_start_hz"]), float(header["f_step_hz"]), samples,
                           float(header["d_ota_m"]))


def _read(path) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise ParseError(f"cannot read: {exc.strerror}", str(path)) from None


def read_scan(path) -> FrequencyScan:
    return decode_scan(_read(path), str(path))


def read_calibration(path) -> CalibrationScan:
    return decode_calibration(_read(path), str(path))


def write_scan(path, scan: FrequencyScan) -> None:
    Path(path).write_bytes(encode_scan(scan))


def write_calibration(path, cal: CalibrationScan) -> None:
    Path(path).write_bytes(encode_calibration(cal))


def scan_filename(orientation) -> str:
    az, el = orientation
    return f"az{az:+04.0f}_el{el:+03.0f}{SUFFIX}"


def read_measurement_dir(root) -> dict[str, list[FrequencyScan]]:
    """Scans under ``root/<rx_id>/*.scan`` grouped by the rx_id in their headers."""
    root = Path(root)
    if not root.is_dir():
        raise ParseError("measurement directory not found", str(root))
    groups: dict[str, list[FrequencyScan]] = {}
    for path in sorted(root.rglob(f"*{SUFFIX}")):
        scan = read_scan(path)
        groups.setdefault(scan.rx_id, []).append(scan)
    if not groups:
        raise ParseError(f"no {SUFFIX} files found", str(root))
    return groups
