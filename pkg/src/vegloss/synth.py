"""Forward model: scenario -> measurement-format scans with known ground truth.

H(f) = S(f) [ G_fs(f, d) A_veg(f) B(orientation) + sum of extra paths ] + noise

where S is a smooth system response, G_fs the free-space response at the
Tx-Rx distance, A_veg the truth model's vegetation attenuation for the
receiver's depth, and B a Gaussian-in-angle beam rolloff.  The OTA reference
is S(f) G_fs(f, d_ota), noiseless.

Noise is circular complex Gaussian, scaled so that on a 1-GHz (1001-point)
rectangular-window PDP the noise power per bin sits ``snr_db`` below the
receiver's scan-averaged boresight LoS power.
"""

from __future__ import annotations

import hashlib
import json
import math
import zlib
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import _yaml
from .errors import OutOfBand, ParseError
from .geometry import SiteGeometry, load_site, tx_rx_distance, vegetation_depth
from .propagation import VegLossModel, dump_model, load_model
from .scanfile import OTA_ID, SUFFIX, encode_calibration, encode_scan, scan_filename
from .sounder import (DEFAULT_D_OTA, DEFAULT_F_START, DEFAULT_F_STEP, DEFAULT_N_POINTS,
                      CalibrationScan, DirectionalScanSet, FrequencyScan, free_space_response,
                      rotation_grid)

SNR_REFERENCE_POINTS = 1001


@dataclass(frozen=True)
class SyntheticPath:
    delay: float
    gain_db: float
    phase: float = 0.0

    def __post_init__(self):
        if not (0 <= self.delay < 1.0 / DEFAULT_F_STEP):
            raise ParseError(f"path delay {self.delay:g} s outside [0, {1 / DEFAULT_F_STEP:g}) s")
        if not math.isfinite(self.gain_db):
            raise ParseError("path gain must be finite")


@dataclass(frozen=True)
class SystemResponse:
    """Smooth complex system response: gain, sinusoidal ripple, bulk delay."""

    gain_db: float = 0.0
    ripple_db: float = 0.0
    ripple_period: float = 700e6
    delay: float = 0.0

    def __call__(self, f):
        f = np.asarray(f, dtype=np.float64)
        depth = 10.0 ** (self.ripple_db / 20.0) - 1.0
        mag = 10.0 ** (self.gain_db / 20.0) * (1.0 + depth * np.cos(2 * np.pi * (f - DEFAULT_F_START) / self.ripple_period))
        return mag * np.exp(-2j * np.pi * f * self.delay)


@dataclass(frozen=True)
class SyntheticScenario:
    site: SiteGeometry
    truth_model: VegLossModel
    extra_paths: Mapping[str, Sequence[SyntheticPath]] = field(default_factory=dict)
    snr_db: float | None = 35.0
    system_response: SystemResponse = SystemResponse()
    seed: int = 0
    rolloff_db: float = 3.0
    d_ota: float = DEFAULT_D_OTA
    orientations: tuple[tuple[float, float], ...] = tuple(rotation_grid())


def _frequencies():
    return DEFAULT_F_START + DEFAULT_F_STEP * np.arange(DEFAULT_N_POINTS)


def veg_attenuation(model: VegLossModel, f, d_veg: float, bound: str = "mid") -> np.ndarray:
    """Linear amplitude factor 10^(-alpha(f) d_veg / 20) for each frequency."""
    f = np.asarray(f, dtype=np.float64)
    lows = np.array([e.band.f_low for e in model])
    slopes = np.array([e.slope(bound) for e in model])
    if np.any(f < model.f_min) or np.any(f > model.f_max):
        raise OutOfBand(f"scan grid exceeds truth model coverage {model.f_min / 1e9:g}-{model.f_max / 1e9:g} GHz")
    idx = np.clip(np.searchsorted(lows, f, side="right") - 1, 0, len(lows) - 1)
    return 10.0 ** (-slopes[idx] * d_veg / 20.0)


def beam_factor(orientation, rolloff_db: float) -> float:
    off = math.hypot(*orientation)
    return 10.0 ** (-rolloff_db * (off / 10.0) ** 2 / 20.0)


def orientation_seed(seed: int, rx_id: str, orientation) -> np.random.SeedSequence:
    """Per-(rx, orientation) stream: SeedSequence([seed, crc32(rx_id), az*10+3600, el*10+3600])."""
    az, el = orientation
    key = [int(seed), zlib.crc32(rx_id.encode()), int(round(az * 10)) + 3600, int(round(el * 10)) + 3600]
    return np.random.SeedSequence(key)


def _los_component(scn: SyntheticScenario, rx_id: str, f):
    d = tx_rx_distance(scn.site, rx_id)
    depth = vegetation_depth(scn.site, rx_id)
    return d, free_space_response(f, d) * veg_attenuation(scn.truth_model, f, depth)


def noise_sigma(scn: SyntheticScenario, rx_id: str) -> float:
    """Per-sample complex noise standard deviation for ``rx_id`` (0 when noise is off)."""
    if scn.snr_db is None:
        return 0.0
    f = _frequencies()
    _, los = _los_component(scn, rx_id, f)
    ref_power = float(np.mean(np.abs(scn.system_response(f) * los) ** 2))
    return math.sqrt(SNR_REFERENCE_POINTS * ref_power / 10.0 ** (scn.snr_db / 10.0))


def synthesize_measurement(scn: SyntheticScenario, rx_id: str, orientation=(0.0, 0.0)) -> FrequencyScan:
    f = _frequencies()
    d, los = _los_component(scn, rx_id, f)
    h = los * beam_factor(orientation, scn.rolloff_db)
    rel = f - DEFAULT_F_START
    for path in scn.extra_paths.get(rx_id, ()):
        h = h + 10.0 ** (path.gain_db / 20.0) * np.exp(1j * path.phase - 2j * np.pi * rel * path.delay)
    h = scn.system_response(f) * h
    sigma = noise_sigma(scn, rx_id)
    if sigma > 0:
        rng = np.random.default_rng(orientation_seed(scn.seed, rx_id, orientation))
        h = h + sigma / math.sqrt(2.0) * (rng.standard_normal(f.size) + 1j * rng.standard_normal(f.size))
    return FrequencyScan(DEFAULT_F_START, DEFAULT_F_STEP, h, orientation, rx_id, d)


def synthesize_ota(scn: SyntheticScenario) -> CalibrationScan:
    f = _frequencies()
    return CalibrationScan(DEFAULT_F_START, DEFAULT_F_STEP,
                           scn.system_response(f) * free_space_response(f, scn.d_ota), scn.d_ota)


def synthesize_set(scn: SyntheticScenario, rx_id: str) -> DirectionalScanSet:
    return DirectionalScanSet(tuple(synthesize_measurement(scn, rx_id, o) for o in scn.orientations))


def manifest(scn: SyntheticScenario) -> dict:
    rx = {}
    for rid in scn.site.rx_ids:
        rx[rid] = {
            "distance_m": tx_rx_distance(scn.site, rid),
            "veg_depth_m": vegetation_depth(scn.site, rid),
            "noise_sigma": noise_sigma(scn, rid),
            "extra_paths": [{"delay_s": p.delay, "gain_db": p.gain_db, "phase_rad": p.phase}
                            for p in scn.extra_paths.get(rid, ())],
        }
    return {
        "seed": scn.seed,
        "seed_mixing": "SeedSequence([seed, crc32(rx_id), round(10*az)+3600, round(10*el)+3600])",
        "snr_db": scn.snr_db,
        "rolloff_db_per_10deg": scn.rolloff_db,
        "d_ota_m": scn.d_ota,
        "orientations": [list(o) for o in scn.orientations],
        "truth_model": [{"f_low_ghz": e.band.f_low / 1e9, "f_high_ghz": e.band.f_high / 1e9,
                         "alpha_min": e.alpha_min, "alpha": e.alpha, "alpha_max": e.alpha_max}
                        for e in scn.truth_model],
        "rx": rx,
    }


def write_dataset(scn: SyntheticScenario, out_dir) -> dict:
    """Write ``ota.scan``, ``meas/<rx_id>/<orientation>.scan``, ``truth_model.csv`` and ``manifest.json``."""
    out = Path(out_dir)
    (out / "meas").mkdir(parents=True, exist_ok=True)
    (out / f"ota{SUFFIX}").write_bytes(encode_calibration(synthesize_ota(scn)))
    for rid in scn.site.rx_ids:
        if rid == OTA_ID:
            raise ParseError(f"rx id {OTA_ID!r} is reserved for calibration files")
        rx_dir = out / "meas" / rid
        rx_dir.mkdir(parents=True, exist_ok=True)
        for o in scn.orientations:
            (rx_dir / scan_filename(o)).write_bytes(encode_scan(synthesize_measurement(scn, rid, o)))
    (out / "truth_model.csv").write_text(dump_model(scn.truth_model))
    man = manifest(scn)
    (out / "manifest.json").write_text(json.dumps(man, indent=2, sort_keys=True) + "\n")
    return man


def directory_digest(root) -> str:
    """SHA-256 over relative paths and contents of every file under ``root``."""
    h = hashlib.sha256()
    root = Path(root)
    for path in sorted(p for p in root.rglob("*") if p.is_file()):
        h.update(path.relative_to(root).as_posix().encode() + b"\0")
        h.update(path.read_bytes())
    return h.hexdigest()


# --- scenario files ------------------------------------------------------------------

_SCENARIO_KEYS = ("site", "truth_model", "snr_db", "seed")
_SCENARIO_OPTIONAL = ("rolloff_db_per_10deg", "d_ota_m", "orientations", "system_response", "extra_paths")


def _grid(node, key, source):
    vals = node[key]
    line = node.key_lines[key]
    if not (isinstance(vals, list) and len(vals) == 3 and all(isinstance(v, (int, float)) for v in vals)):
        raise ParseError(f"{key} must be [start, stop, step]", source, line)
    if vals[2] <= 0 or vals[1] < vals[0]:
        raise ParseError(f"{key} range is empty or step <= 0", source, line)
    return tuple(float(v) for v in vals)


def parse_scenario(text: str, source: str = "<scenario>", base_dir=None) -> SyntheticScenario:
    """Parse a YAML scenario; ``site`` and ``truth_model`` paths resolve against ``base_dir``."""
    root = _yaml.load(text, source)
    _yaml.check_keys(root, _SCENARIO_KEYS, _SCENARIO_OPTIONAL, source, "scenario")
    base = Path(base_dir) if base_dir is not None else Path(".")

    def resolve(value, builtin):
        value = str(value)
        return value if value == builtin else str(base / value)

    site = load_site(resolve(root["site"], "usc_mcclintock"))
    model = load_model(resolve(root["truth_model"], "builtin"))

    snr = root["snr_db"]
    if snr is not None:
        snr = _yaml.number(root, "snr_db", source)
    seed = root["seed"]
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ParseError("seed must be a non-negative integer", source, root.key_lines["seed"])

    kwargs = {}
    if "rolloff_db_per_10deg" in root:
        kwargs["rolloff_db"] = _yaml.number(root, "rolloff_db_per_10deg", source, positive=True)
    if "d_ota_m" in root:
        kwargs["d_ota"] = _yaml.number(root, "d_ota_m", source, positive=True, allow_zero=False)
    if "orientations" in root:
        node = root["orientations"]
        _yaml.check_keys(node, ("azimuth", "elevation"), (), source, "orientations")
        kwargs["orientations"] = tuple(rotation_grid(_grid(node, "azimuth", source),
                                                     _grid(node, "elevation", source)))
    if "system_response" in root:
        node = root["system_response"]
        keys = ("gain_db", "ripple_db", "ripple_period_mhz", "delay_ns")
        _yaml.check_keys(node, (), keys, source, "system_response")
        vals = {k: _yaml.number(node, k, source) for k in keys if k in node}
        if vals.get("ripple_period_mhz", 1.0) <= 0:
            raise ParseError("ripple_period_mhz must be > 0", source, node.key_lines["ripple_period_mhz"])
        kwargs["system_response"] = SystemResponse(
            vals.get("gain_db", 0.0), vals.get("ripple_db", 0.0),
            vals.get("ripple_period_mhz", 700.0) * 1e6, vals.get("delay_ns", 0.0) * 1e-9)
    if "extra_paths" in root:
        node = root["extra_paths"]
        _yaml.check_keys(node, (), tuple(node) if isinstance(node, dict) else (), source, "extra_paths")
        paths = {}
        for rid, items in node.items():
            site.rx(rid)
            if not isinstance(items, list):
                raise ParseError(f"extra_paths.{rid} must be a list", source, node.key_lines[rid])
            plist = []
            for item in items:
                _yaml.check_keys(item, ("delay_ns", "gain_db"), ("phase_rad",), source, "path")
                try:
                    plist.append(SyntheticPath(_yaml.number(item, "delay_ns", source) * 1e-9,
                                               _yaml.number(item, "gain_db", source),
                                               _yaml.number(item, "phase_rad", source) if "phase_rad" in item else 0.0))
                except ParseError as exc:
                    raise ParseError(str(exc), source, item.line) from None
            paths[rid] = tuple(plist)
        kwargs["extra_paths"] = paths
    return SyntheticScenario(site, model, snr_db=snr, seed=seed, **kwargs)


REFERENCE_SCENARIO = "reference"


def load_scenario(path) -> SyntheticScenario:
    """Read a scenario file; the bare name ``reference`` selects the shipped scenario."""
    if str(path) == REFERENCE_SCENARIO:
        text = resources.files("vegloss.data").joinpath("reference_scenario.yaml").read_text()
        return parse_scenario(text, "reference_scenario.yaml")
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"cannot read scenario: {exc.strerror}", str(path)) from None
    return parse_scenario(text, str(path), path.parent)
