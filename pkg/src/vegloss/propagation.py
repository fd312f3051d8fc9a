"""Free-space reference, excess vegetation loss and the per-band slope model."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from .errors import InvalidInput, OutOfBand, ParseError, BandCoverageError

C = 299_792_458.0

BOUNDS = ("low", "mid", "high")
MODEL_HEADER = ("f_low_ghz", "f_high_ghz", "alpha_min", "alpha", "alpha_max")


@dataclass(frozen=True, order=True)
class SubBand:
    f_low: float
    f_high: float

    def __post_init__(self):
        if not self.f_low < self.f_high:
            raise InvalidInput(f"sub-band needs f_low < f_high, got {self.f_low}..{self.f_high}")

    @property
    def center(self) -> float:
        return 0.5 * (self.f_low + self.f_high)

    @property
    def label(self) -> str:
        return f"{_ghz(self.f_low)}-{_ghz(self.f_high)}"

    def __str__(self):
        return f"{self.label} GHz"


@dataclass(frozen=True)
class ModelEntry:
    band: SubBand
    alpha_min: float
    alpha: float
    alpha_max: float

    def slope(self, bound: str = "mid") -> float:
        if bound == "mid":
            return self.alpha
        if bound == "low":
            return self.alpha_min
        if bound == "high":
            return self.alpha_max
        raise InvalidInput(f"bound must be one of {BOUNDS}, got {bound!r}")


class VegLossModel:
    """Ordered, contiguous per-band slopes (dB/m) of excess loss vs vegetation depth."""

    def __init__(self, entries: Iterable[ModelEntry]):
        entries = sorted(entries, key=lambda e: e.band)
        if not entries:
            raise BandCoverageError("model needs at least one band")
        for prev, cur in zip(entries, entries[1:]):
            if cur.band.f_low < prev.band.f_high:
                raise BandCoverageError(f"bands {prev.band} and {cur.band} overlap")
            if cur.band.f_low > prev.band.f_high:
                raise BandCoverageError(f"gap between {prev.band} and {cur.band}")
        for e in entries:
            if not e.alpha_min <= e.alpha <= e.alpha_max:
                raise InvalidInput(f"{e.band}: need alpha_min <= alpha <= alpha_max")
        self.entries = tuple(entries)

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __eq__(self, other):
        return isinstance(other, VegLossModel) and self.entries == other.entries

    def __repr__(self):
        return f"VegLossModel({len(self.entries)} bands, {self.f_min / 1e9:g}-{self.f_max / 1e9:g} GHz)"

    @property
    def f_min(self) -> float:
        return self.entries[0].band.f_low

    @property
    def f_max(self) -> float:
        return self.entries[-1].band.f_high

    @property
    def bands(self) -> list[SubBand]:
        return [e.band for e in self.entries]

    def entry_for(self, f: float) -> ModelEntry:
        # half-open [f_low, f_high); the final band also owns its upper edge
        for e in self.entries:
            if e.band.f_low <= f < e.band.f_high:
                return e
        last = self.entries[-1]
        if f == last.band.f_high:
            return last
        raise OutOfBand(f"{f / 1e9:g} GHz outside model coverage "
                        f"{self.f_min / 1e9:g}-{self.f_max / 1e9:g} GHz")


# Excess-loss slopes per 1-GHz band, 6-18 GHz: (alpha_min, alpha, alpha_max) in dB/m.
SLOPE_TABLE = (
    (6, 7, 0.86, 1.26, 1.66),
    (7, 8, 1.04, 1.50, 1.95),
    (8, 9, 1.11, 1.55, 2.00),
    (9, 10, 0.91, 1.57, 2.23),
    (10, 11, 1.24, 1.68, 2.11),
    (11, 12, 1.23, 1.80, 2.38),
    (12, 13, 1.33, 1.80, 2.26),
    (13, 14, 1.12, 1.69, 2.27),
    (14, 15, 1.35, 1.80, 2.25),
    (15, 16, 1.22, 1.81, 2.40),
    (16, 17, 1.25, 1.76, 2.26),
    (17, 18, 1.10, 1.79, 2.48),
)


def builtin_model() -> VegLossModel:
    return VegLossModel(ModelEntry(SubBand(lo * 1e9, hi * 1e9), amin, a, amax)
                        for lo, hi, amin, a, amax in SLOPE_TABLE)


def friis_db(f: float, d: float) -> float:
    """Free-space received/transmitted power ratio in dB with unity antenna gains."""
    if not (f > 0 and d > 0) or not (math.isfinite(f) and math.isfinite(d)):
        raise InvalidInput(f"friis_db needs f > 0 and d > 0, got f={f}, d={d}")
    return -20.0 * math.log10(4.0 * math.pi * d * f / C)


def excess_loss(p_friis: float, p_los: float) -> float:
    """Friis power minus measured LoS power, in dB.  Negative values are kept."""
    if not (math.isfinite(p_friis) and math.isfinite(p_los)):
        raise InvalidInput("excess_loss needs finite inputs")
    return p_friis - p_los


def predict_loss(model: VegLossModel, f: float, d_veg: float, bound: str = "mid") -> float:
    if not d_veg >= 0 or not math.isfinite(d_veg):
        raise InvalidInput(f"vegetation depth must be >= 0, got {d_veg}")
    return model.entry_for(f).slope(bound) * d_veg


@dataclass(frozen=True)
class LinkBudgetInput:
    f: float
    d: float
    d_veg: float = 0.0
    tx_power: float = 0.0
    tx_gain: float = 0.0
    rx_gain: float = 0.0

    def __post_init__(self):
        if not self.f > 0:
            raise InvalidInput("f must be > 0")
        if not self.d > 0:
            raise InvalidInput("d must be > 0")
        if not 0 <= self.d_veg <= self.d:
            raise InvalidInput(f"need 0 <= d_veg <= d, got d_veg={self.d_veg}, d={self.d}")


def link_budget(inp: LinkBudgetInput, model: VegLossModel, bound: str = "mid") -> float:
    """Received power in dBm: power + gains + Friis - vegetation loss."""
    return (inp.tx_power + inp.tx_gain + inp.rx_gain + friis_db(inp.f, inp.d)
            - predict_loss(model, inp.f, inp.d_veg, bound))


# --- model file ------------------------------------------------------------------

def _ghz(f_hz: float) -> str:
    v = f_hz / 1e9
    return str(int(v)) if v == int(v) else repr(v)


def _num(x: float) -> str:
    return repr(float(x))


def dump_model(model: VegLossModel) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(MODEL_HEADER)
    for e in model:
        w.writerow([_ghz(e.band.f_low), _ghz(e.band.f_high), _num(e.alpha_min), _num(e.alpha), _num(e.alpha_max)])
    return buf.getvalue()


def parse_model(text: str, source: str = "<model>") -> VegLossModel:
    rows = list(csv.reader(io.StringIO(text)))
    rows = [r for r in rows if r and not r[0].startswith("#")]
    if not rows or tuple(c.strip() for c in rows[0]) != MODEL_HEADER:
        raise ParseError(f"expected header {','.join(MODEL_HEADER)}", source, 1)
    entries = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(MODEL_HEADER):
            raise ParseError(f"expected {len(MODEL_HEADER)} fields, got {len(row)}", source, lineno)
        try:
            lo, hi, amin, a, amax = (float(c) for c in row)
        except ValueError:
            raise ParseError(f"non-numeric field in {row}", source, lineno) from None
        try:
            entries.append(ModelEntry(SubBand(float(round(lo * 1e9)), float(round(hi * 1e9))), amin, a, amax))
        except InvalidInput as exc:
            raise ParseError(str(exc), source, lineno) from None
    try:
        return VegLossModel(entries)
    except (InvalidInput, BandCoverageError) as exc:
        raise ParseError(str(exc), source) from None


def load_model(path) -> VegLossModel:
    """Read a model CSV; ``builtin`` (or ``None``) returns the shipped 6-18 GHz model."""
    if path is None or str(path) == "builtin":
        return builtin_model()
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read model file: {exc.strerror}", str(path)) from None
    return parse_model(text, str(path))
