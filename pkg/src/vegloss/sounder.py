"""Directional frequency scans -> calibrated sub-band PDPs -> LoS power.

Default sweep grid: 6 GHz start, 1 MHz step, 12 001 points.  That gives a
1 us unambiguous delay span on every PDP (full band or 1-GHz slice) and
delay bins of ~83 ps (full band) or ~1 ns (1-GHz slice).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from ._kernels import dtft_power
from .errors import (DegenerateCalibration, GridMismatch, InsufficientData, InvalidGate,
                     InvalidInput, LosNotFound, NoAlignment, OutOfBand)
from .propagation import C, SubBand

DEFAULT_F_START = 6e9
DEFAULT_F_STEP = 1e6
DEFAULT_N_POINTS = 12_001
DEFAULT_D_OTA = 44.0
DEFAULT_THRESHOLD_DB = 12.0
DEFAULT_GATE_FRACTION = 0.9
DEFAULT_TAIL_FRACTION = 0.1
DEFAULT_SEARCH_HALFWIDTH = 3

WINDOWS = ("rectangular", "hann")


def default_frequencies() -> np.ndarray:
    return DEFAULT_F_START + DEFAULT_F_STEP * np.arange(DEFAULT_N_POINTS)


def free_space_response(f, d: float):
    """Complex free-space transfer function (c / 4 pi d f) exp(-j 2 pi f d / c)."""
    f = np.asarray(f, dtype=np.float64)
    return (C / (4.0 * np.pi * d * f)) * np.exp(-2j * np.pi * f * d / C)


def one_ghz_bands(f_low: float = 6e9, f_high: float = 18e9, width: float = 1e9) -> list[SubBand]:
    n = int(round((f_high - f_low) / width))
    return [SubBand(f_low + k * width, f_low + (k + 1) * width) for k in range(n)]


@dataclass(frozen=True, eq=False)
class FrequencyScan:
    """Complex transfer-function samples on a uniform grid for one Rx orientation."""

    f_start: float
    f_step: float
    samples: np.ndarray
    orientation: tuple[float, float] = (0.0, 0.0)
    rx_id: str = ""
    distance: float = float("nan")

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.complex128)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "orientation", (float(self.orientation[0]), float(self.orientation[1])))
        if not (self.f_step > 0 and math.isfinite(self.f_step) and math.isfinite(self.f_start)):
            raise InvalidInput(f"bad frequency grid: start={self.f_start}, step={self.f_step}")
        if samples.ndim != 1 or samples.size < 2:
            raise InvalidInput("a scan needs at least 2 samples")

    @property
    def n(self) -> int:
        return self.samples.size

    @property
    def f_stop(self) -> float:
        return self.f_start + (self.n - 1) * self.f_step

    @property
    def frequencies(self) -> np.ndarray:
        return self.f_start + self.f_step * np.arange(self.n)

    @property
    def azimuth(self) -> float:
        return self.orientation[0]

    @property
    def elevation(self) -> float:
        return self.orientation[1]

    def same_grid(self, other) -> bool:
        return (self.n == other.n
                and math.isclose(self.f_start, other.f_start, rel_tol=1e-12, abs_tol=1e-6)
                and math.isclose(self.f_step, other.f_step, rel_tol=1e-12))


@dataclass(frozen=True, eq=False)
class CalibrationScan:
    """Over-the-air reference sweep taken at free-space distance ``d_ota``."""

    f_start: float
    f_step: float
    samples: np.ndarray
    d_ota: float = DEFAULT_D_OTA

    def __post_init__(self):
        object.__setattr__(self, "samples", np.asarray(self.samples, dtype=np.complex128))
        if not self.f_step > 0:
            raise InvalidInput("calibration grid needs f_step > 0")
        if not self.d_ota > 0:
            raise InvalidInput("d_ota must be > 0")

    n = FrequencyScan.n
    frequencies = FrequencyScan.frequencies
    same_grid = FrequencyScan.same_grid


@dataclass(frozen=True, eq=False)
class PowerDelayProfile:
    band: SubBand
    f_step: float
    power: np.ndarray
    spectrum: np.ndarray
    window: str = "rectangular"
    retained: np.ndarray | None = None
    noise_floor: float | None = None
    threshold: float | None = None
    tau_gate: float | None = None

    @property
    def n(self) -> int:
        return self.power.size

    @property
    def delay_step(self) -> float:
        return 1.0 / (self.n * self.f_step)

    @property
    def span(self) -> float:
        return 1.0 / self.f_step

    @property
    def delays(self) -> np.ndarray:
        return np.arange(self.n) * self.delay_step

    @property
    def gated(self) -> bool:
        return self.retained is not None

    def bins(self) -> tuple[np.ndarray, np.ndarray]:
        """(delay, power) of the retained bins; every bin when ungated."""
        if self.retained is None:
            return self.delays, self.power
        return self.delays[self.retained], self.power[self.retained]

    def power_at(self, taus) -> np.ndarray:
        """Band-limited (Fourier-interpolated) power at arbitrary delays."""
        return dtft_power(self.spectrum, self.f_step, taus)


@dataclass(frozen=True)
class DirectionalScanSet:
    scans: tuple[FrequencyScan, ...]

    def __post_init__(self):
        scans = tuple(self.scans)
        object.__setattr__(self, "scans", scans)
        if not scans:
            raise InvalidInput("empty directional scan set")
        first = scans[0]
        seen = set()
        for s in scans:
            if s.orientation in seen:
                raise InvalidInput(f"duplicate orientation {s.orientation}")
            seen.add(s.orientation)
            if s.rx_id != first.rx_id:
                raise InvalidInput("scan set mixes rx ids")
            if not (s.distance == first.distance or (math.isnan(s.distance) and math.isnan(first.distance))):
                raise InvalidInput("scan set mixes distances")
            if not s.same_grid(first):
                raise GridMismatch("scan set mixes frequency grids")

    @property
    def rx_id(self) -> str:
        return self.scans[0].rx_id

    @property
    def distance(self) -> float:
        return self.scans[0].distance


def rotation_grid(az=(-60, 60, 10), el=(-30, 30, 10)) -> list[tuple[float, float]]:
    """Rx orientations (azimuth, elevation) in degrees, inclusive ranges."""
    azs = np.arange(az[0], az[1] + az[2] / 2, az[2])
    els = np.arange(el[0], el[1] + el[2] / 2, el[2])
    return [(float(a), float(e)) for a in azs for e in els]


# --- operations ------------------------------------------------------------------------

def calibrate(meas: FrequencyScan, cal: CalibrationScan) -> FrequencyScan:
    """Divide by the OTA reference and re-embed the free-space response at ``d_ota``.

    The result is the absolute channel transfer function, so LoS power read
    from it compares directly against Friis.
    """
    if not meas.same_grid(cal):
        raise GridMismatch("measurement and calibration grids differ")
    if np.any(cal.samples == 0):
        raise DegenerateCalibration("calibration scan has zero samples")
    restore = free_space_response(meas.frequencies, cal.d_ota)
    return replace(meas, samples=meas.samples / cal.samples * restore)


def subband_slice(scan: FrequencyScan, band: SubBand) -> FrequencyScan:
    """Contiguous samples covering [f_low, f_high], both edges included."""
    tol = scan.f_step / 2
    if band.f_low < scan.f_start - tol or band.f_high > scan.f_stop + tol:
        raise OutOfBand(f"{band} not inside scan span "
                        f"{scan.f_start / 1e9:g}-{scan.f_stop / 1e9:g} GHz")
    i0 = int(round((band.f_low - scan.f_start) / scan.f_step))
    i1 = int(round((band.f_high - scan.f_start) / scan.f_step))
    if i1 - i0 < 1:
        raise OutOfBand(f"{band} narrower than one grid step")
    return replace(scan, f_start=scan.f_start + i0 * scan.f_step, samples=scan.samples[i0:i1 + 1])


def _window(name: str, n: int) -> np.ndarray:
    if name in ("rectangular", "rect"):
        return np.ones(n)
    if name == "hann":
        w = np.hanning(n)
        return w / np.sqrt(np.mean(w ** 2))
    raise InvalidInput(f"window must be one of {WINDOWS}, got {name!r}")


def compute_pdp(scan: FrequencyScan, window: str = "rectangular") -> PowerDelayProfile:
    """|IDFT|^2 of the (unit mean-square) windowed spectrum, 1/N normalised."""
    w = _window(window, scan.n)
    spectrum = scan.samples * w
    power = np.abs(np.fft.ifft(spectrum)) ** 2
    name = "rectangular" if window == "rect" else window
    return PowerDelayProfile(SubBand(scan.f_start, scan.f_stop), scan.f_step, power, spectrum, name)


def estimate_noise_floor(pdp: PowerDelayProfile, tail_fraction: float = DEFAULT_TAIL_FRACTION) -> float:
    """Median bin power over the last ``tail_fraction`` of the delay span."""
    if not 0 < tail_fraction <= 0.5:
        raise InvalidInput("tail_fraction must be in (0, 0.5]")
    n_tail = int(math.floor(pdp.n * tail_fraction + 1e-9))
    if n_tail < 10:
        raise InsufficientData(f"only {n_tail} tail bins for noise floor (need >= 10)")
    return float(np.median(pdp.power[-n_tail:]))


def default_tau_gate(pdp_or_f_step) -> float:
    f_step = getattr(pdp_or_f_step, "f_step", pdp_or_f_step)
    return DEFAULT_GATE_FRACTION / f_step


def gate_and_threshold(pdp: PowerDelayProfile, tau_gate: float | None = None,
                       threshold_offset: float = DEFAULT_THRESHOLD_DB,
                       tail_fraction: float = DEFAULT_TAIL_FRACTION) -> PowerDelayProfile:
    """Keep bins with delay <= tau_gate and power >= noise floor + offset (dB).

    Applying this to an already gated PDP reuses its noise floor and only
    narrows the retained set, so repeated application is idempotent.
    """
    if tau_gate is None:
        tau_gate = default_tau_gate(pdp)
    if not 0 <= tau_gate <= pdp.span:
        raise InvalidGate(f"tau_gate {tau_gate:g} s outside delay span [0, {pdp.span:g}] s")
    floor = pdp.noise_floor if pdp.gated else estimate_noise_floor(pdp, tail_fraction)
    threshold = floor * 10.0 ** (threshold_offset / 10.0)
    keep = (pdp.delays <= tau_gate) & (pdp.power >= threshold)
    if pdp.gated:
        keep &= pdp.retained
    return replace(pdp, retained=keep, noise_floor=floor, threshold=threshold, tau_gate=tau_gate)


def extract_los_power(pdp: PowerDelayProfile, d: float, search_halfwidth: int = DEFAULT_SEARCH_HALFWIDTH,
                      refine: bool = True) -> float:
    """LoS power in dB from the strongest retained bin near delay d / c.

    With ``refine`` the peak is re-evaluated on the continuous
    (zero-padding-equivalent) delay axis within half a bin of that bin, which
    removes the up-to-3.9 dB scalloping loss of an off-grid LoS delay.  With
    ``refine=False`` the raw bin power is returned.
    """
    if not pdp.gated:
        raise InvalidInput("extract_los_power needs a gated PDP")
    if not d > 0:
        raise InvalidInput("distance must be > 0")
    tau_los = d / C
    if tau_los >= pdp.span:
        raise InvalidInput(f"LoS delay {tau_los:g} s aliases beyond the {pdp.span:g} s span")
    center = int(round(tau_los / pdp.delay_step))
    lo = max(center - search_halfwidth, 0)
    hi = min(center + search_halfwidth, pdp.n - 1)
    idx = np.arange(lo, hi + 1)
    idx = idx[pdp.retained[idx]]
    if idx.size == 0 or not np.any(pdp.power[idx] > 0):
        raise LosNotFound(f"no retained bin within +/-{search_halfwidth} bins of {tau_los * 1e9:.2f} ns")
    best = int(idx[np.argmax(pdp.power[idx])])
    peak = float(pdp.power[best])
    if refine:
        step = pdp.delay_step
        tau0 = best * step
        res = minimize_scalar(lambda t: -float(pdp.power_at(t)[0]),
                              bounds=(tau0 - 0.5 * step, tau0 + 0.5 * step),
                              method="bounded", options={"xatol": 1e-6 * step})
        peak = max(peak, -float(res.fun))
    return 10.0 * math.log10(peak)


def _orientation_key(orientation, p_los):
    az, el = orientation
    # max power, then smallest |az|, smallest |el|; signed angles make the order total
    return (-p_los, abs(az), abs(el), az, el)


def los_powers(scan: FrequencyScan, cal: CalibrationScan, bands: Sequence[SubBand], *,
               window: str = "rectangular", tau_gate: float | None = None,
               threshold_offset: float = DEFAULT_THRESHOLD_DB,
               search_halfwidth: int = DEFAULT_SEARCH_HALFWIDTH, refine: bool = True,
               distance: float | None = None) -> list[float | None]:
    """P_LoS per band for one orientation; ``None`` where the LoS bin is missing."""
    d = scan.distance if distance is None else distance
    calibrated = calibrate(scan, cal)
    out = []
    for band in bands:
        pdp = gate_and_threshold(compute_pdp(subband_slice(calibrated, band), window),
                                 tau_gate, threshold_offset)
        try:
            out.append(extract_los_power(pdp, d, search_halfwidth, refine))
        except LosNotFound:
            out.append(None)
    return out


def best_alignments(scan_set: DirectionalScanSet, cal: CalibrationScan, bands: Sequence[SubBand],
                    **options) -> list[tuple[tuple[float, float], float] | None]:
    """Best orientation and its P_LoS for each band (``None`` if no orientation sees the LoS)."""
    per_orientation = [(s.orientation, los_powers(s, cal, bands, **options)) for s in scan_set.scans]
    result = []
    for k in range(len(bands)):
        found = [(o, p[k]) for o, p in per_orientation if p[k] is not None]
        if not found:
            result.append(None)
        else:
            result.append(min(found, key=lambda item: _orientation_key(*item)))
    return result


def select_best_alignment(scan_set: DirectionalScanSet, cal: CalibrationScan, band: SubBand,
                          **options) -> tuple[tuple[float, float], float]:
    best = best_alignments(scan_set, cal, [band], **options)[0]
    if best is None:
        raise NoAlignment(f"no orientation of {scan_set.rx_id!r} shows a LoS component in {band}")
    return best


def parse_bands(spec: str) -> list[SubBand]:
    """Parse ``start:stop:width`` in GHz (e.g. ``6:18:1``) into contiguous bands."""
    try:
        lo, hi, width = (float(v) for v in spec.split(":"))
    except ValueError:
        raise InvalidInput(f"bands must look like start:stop:width in GHz, got {spec!r}") from None
    if not (width > 0 and hi > lo):
        raise InvalidInput(f"bad band specification {spec!r}")
    n = int(round((hi - lo) / width))
    if not math.isclose(lo + n * width, hi, abs_tol=1e-9):
        raise InvalidInput(f"band width {width} does not tile {lo}..{hi} GHz")
    return [SubBand(float(round((lo + k * width) * 1e9)), float(round((lo + (k + 1) * width) * 1e9)))
            for k in range(n)]
