"""Batch orchestration shared by the CLI and the end-to-end tests."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .errors import DegenerateFit, InsufficientData, ParseError
from .fitting import DepthLossSample, FitResult, fit_origin_constrained
from .geometry import SiteGeometry, tx_rx_distance, vegetation_depth
from .propagation import SubBand, excess_loss, friis_db
from .sounder import CalibrationScan, DirectionalScanSet, FrequencyScan, best_alignments

SAMPLE_HEADER = ("rx_id", "band", "subslice", "orientation_az", "orientation_el", "distance_m",
                 "veg_depth_m", "p_los_db", "p_friis_db", "l_veg_db", "status")
FIT_HEADER = ("f_low_ghz", "f_high_ghz", "alpha_min", "alpha", "alpha_max", "n_samples")
RESIDUAL_HEADER = ("band", "rx_id", "veg_depth_m", "l_veg_db", "fitted_db", "residual_db")


@dataclass(frozen=True)
class SampleRow:
    rx_id: str
    band: SubBand
    subslice: int | None
    orientation: tuple[float, float] | None
    distance: float
    veg_depth: float
    p_los: float | None
    p_friis: float
    l_veg: float | None

    @property
    def ok(self) -> bool:
        return self.p_los is not None


def _slices(band: SubBand, k: int) -> list[SubBand]:
    width = (band.f_high - band.f_low) / k
    return [SubBand(band.f_low + i * width, band.f_low + (i + 1) * width) for i in range(k)]


def process_rx(site: SiteGeometry, scan_set: DirectionalScanSet, cal: CalibrationScan,
               bands: Sequence[SubBand], subslices: int = 0, **options) -> list[SampleRow]:
    """Best-aligned LoS power, Friis reference and excess loss per band for one receiver."""
    rid = scan_set.rx_id
    d = scan_set.distance
    if not (d > 0 and math.isfinite(d)):
        d = tx_rx_distance(site, rid)
    depth = vegetation_depth(site, rid)

    targets = [(band, None, band) for band in bands]
    if subslices > 1:
        targets += [(band, i, sub) for band in bands for i, sub in enumerate(_slices(band, subslices))]
    best = best_alignments(scan_set, cal, [t[2] for t in targets], distance=d, **options)

    rows = []
    for (band, idx, sub), hit in zip(targets, best):
        p_friis = friis_db(sub.center, d)
        if hit is None:
            rows.append(SampleRow(rid, band, idx, None, d, depth, None, p_friis, None))
        else:
            orientation, p_los = hit
            rows.append(SampleRow(rid, band, idx, orientation, d, depth, p_los, p_friis,
                                  excess_loss(p_friis, p_los)))
    return rows


def process_dataset(site: SiteGeometry, groups: Mapping[str, Sequence[FrequencyScan]],
                    cal: CalibrationScan, bands: Sequence[SubBand], subslices: int = 0,
                    **options) -> list[SampleRow]:
    rows = []
    for rid in sorted(groups):
        site.rx(rid)
        scans = sorted(groups[rid], key=lambda s: s.orientation)
        rows += process_rx(site, DirectionalScanSet(tuple(scans)), cal, bands, subslices, **options)
    return sorted(rows, key=lambda r: (r.rx_id, r.band, -1 if r.subslice is None else r.subslice))


# --- sample tables -------------------------------------------------------------------

def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _parse_band(label: str) -> SubBand:
    lo, hi = label.split("-")
    return SubBand(float(round(float(lo) * 1e9)), float(round(float(hi) * 1e9)))


def dump_samples(rows: Iterable[SampleRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SAMPLE_HEADER)
    for r in rows:
        az, el = r.orientation if r.orientation is not None else (None, None)
        w.writerow([r.rx_id, r.band.label, _fmt(r.subslice), _fmt(az), _fmt(el), _fmt(r.distance),
                    _fmt(r.veg_depth), _fmt(r.p_los), _fmt(r.p_friis), _fmt(r.l_veg),
                    "ok" if r.ok else "los_not_found"])
    return buf.getvalue()


def parse_samples(text: str, source: str = "<samples>") -> list[SampleRow]:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("empty sample table", source, 1) from None
    if tuple(header) != SAMPLE_HEADER:
        raise ParseError(f"expected header {','.join(SAMPLE_HEADER)}", source, 1)
    rows = []
    for lineno, rec in enumerate(reader, start=2):
        if not rec or rec[0].startswith("#"):
            continue
        if len(rec) != len(SAMPLE_HEADER):
            raise ParseError(f"expected {len(SAMPLE_HEADER)} fields, got {len(rec)}", source, lineno)
        f = dict(zip(SAMPLE_HEADER, rec))

        def num(key, optional=False):
            if f[key] == "" and optional:
                return None
            try:
                return float(f[key])
            except ValueError:
                raise ParseError(f"{key}: not a number: {f[key]!r}", source, lineno) from None

        try:
            band = _parse_band(f["band"])
        except ValueError:
            raise ParseError(f"bad band label {f['band']!r}", source, lineno) from None
        az, el = num("orientation_az", True), num("orientation_el", True)
        sub = f["subslice"]
        rows.append(SampleRow(
            f["rx_id"], band, int(sub) if sub != "" else None,
            None if az is None or el is None else (az, el),
            num("distance_m"), num("veg_depth_m"), num("p_los_db", True), num("p_friis_db"),
            num("l_veg_db", True)))
    return rows


def samples_for_fit(rows: Iterable[SampleRow]) -> dict:
    """Group usable rows as {band: (band-level samples, {subslice: samples})}."""
    out: dict = {}
    for r in rows:
        if not r.ok:
            continue
        main, subs = out.setdefault(r.band, ([], {}))
        sample = DepthLossSample(r.rx_id, r.veg_depth, r.l_veg, r.band)
        if r.subslice is None:
            main.append(sample)
        else:
            subs.setdefault(r.subslice, []).append(sample)
    return out


def fit_bands(rows: Iterable[SampleRow], bands: Sequence[SubBand], level: float = 0.95,
              method: str = "ci") -> tuple[list[FitResult], list[tuple[SubBand, str]]]:
    """Fit every requested band; return (fits, [(omitted band, reason)])."""
    grouped = samples_for_fit(rows)
    fits, omitted = [], []
    for band in bands:
        main, subs = grouped.get(band, ([], {}))
        if not any(s.d_veg > 0 for s in main):
            omitted.append((band, "no positive-depth samples" if main else "no samples"))
            continue
        groups = [subs[k] for k in sorted(subs)] if method == "empirical" else None
        if method == "empirical" and not groups:
            raise InsufficientData(f"{band}: empirical bounds need subslice rows (process --subslices)")
        try:
            fits.append(fit_origin_constrained(main, level, method, groups))
        except DegenerateFit as exc:
            omitted.append((band, str(exc)))
    return fits, omitted


def dump_fit_report(fits: Sequence[FitResult], omitted=()) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(FIT_HEADER)
    for fit in sorted(fits, key=lambda f: f.band):
        w.writerow([_ghz(fit.band.f_low), _ghz(fit.band.f_high), repr(fit.alpha_min), repr(fit.alpha),
                    repr(fit.alpha_max), fit.n])
    methods = sorted({f.method for f in fits})
    if methods:
        buf.write(f"# bounds: {', '.join(methods)}\n")
    for band, reason in omitted:
        buf.write(f"# omitted {band.label} GHz: {reason}\n")
    return buf.getvalue()


def dump_residuals(fits: Sequence[FitResult], rows: Iterable[SampleRow]) -> str:
    grouped = samples_for_fit(rows)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RESIDUAL_HEADER)
    for fit in sorted(fits, key=lambda f: f.band):
        samples = grouped[fit.band][0]
        for s, r in zip(samples, fit.residuals):
            w.writerow([fit.band.label, s.rx_id, repr(s.d_veg), repr(s.l_veg), repr(fit.alpha * s.d_veg), repr(r)])
    return buf.getvalue()


def _ghz(f_hz: float) -> str:
    v = f_hz / 1e9
    return str(int(v)) if v == int(v) else repr(v)
