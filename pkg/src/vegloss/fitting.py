"""Origin-constrained least squares of excess loss against vegetation depth."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import stats

from .errors import BandCoverageError, DegenerateFit, InsufficientData, InvalidInput
from .propagation import ModelEntry, SubBand, VegLossModel

BOUND_METHODS = ("ci", "empirical")


@dataclass(frozen=True)
class DepthLossSample:
    rx_id: str
    d_veg: float
    l_veg: float
    band: SubBand

    def __post_init__(self):
        if not self.d_veg >= 0:
            raise InvalidInput(f"{self.rx_id}: vegetation depth must be >= 0")
        if not math.isfinite(self.l_veg):
            raise InvalidInput(f"{self.rx_id}: excess loss must be finite")


@dataclass(frozen=True)
class FitResult:
    band: SubBand
    alpha: float
    alpha_min: float
    alpha_max: float
    residuals: tuple[float, ...] = field(default=())
    n: int = 0
    method: str = "ci"

    def __post_init__(self):
        if not self.alpha_min <= self.alpha <= self.alpha_max:
            raise InvalidInput("need alpha_min <= alpha <= alpha_max")
        if len(self.residuals) != self.n:
            raise InvalidInput("residual count does not match n")


def _arrays(samples):
    d = np.array([s.d_veg for s in samples], dtype=np.float64)
    l = np.array([s.l_veg for s in samples], dtype=np.float64)
    return d, l


def origin_slope(samples: Sequence[DepthLossSample]) -> float:
    """sum(d L) / sum(d^2)."""
    d, l = _arrays(samples)
    sxx = float(d @ d)
    if sxx == 0.0:
        raise DegenerateFit("every sample has zero vegetation depth")
    return float(d @ l) / sxx


def slope_bounds(samples: Sequence[DepthLossSample], alpha: float, level: float = 0.95) -> tuple[float, float]:
    """Two-sided ``level`` t-interval for a through-origin slope.

    alpha +/- t_{n-1} * s / sqrt(sum d^2), s^2 = sum r^2 / (n - 1); the lower
    end is floored at 0.
    """
    if not 0 < level < 1:
        raise InvalidInput("confidence level must be in (0, 1)")
    d, l = _arrays(samples)
    if np.count_nonzero(d > 0) < 2:
        raise InsufficientData("slope bounds need at least 2 samples with positive depth")
    n = d.size
    resid = l - alpha * d
    s = math.sqrt(float(resid @ resid) / (n - 1))
    half = stats.t.ppf(0.5 + level / 2.0, n - 1) * s / math.sqrt(float(d @ d))
    return max(alpha - half, 0.0), alpha + half


def empirical_bounds(groups: Iterable[Sequence[DepthLossSample]]) -> tuple[float, float]:
    """Min and max slope over independent sub-fits (e.g. narrower frequency slices)."""
    slopes = [origin_slope(g) for g in groups if any(s.d_veg > 0 for s in g)]
    if not slopes:
        raise InsufficientData("no sub-fit has a positive-depth sample")
    return max(min(slopes), 0.0), max(slopes)


def fit_origin_constrained(samples: Sequence[DepthLossSample], level: float = 0.95,
                           method: str = "ci", groups=None) -> FitResult:
    """Fit L = alpha * d through the origin and attach alpha_min / alpha_max.

    ``method="ci"`` uses :func:`slope_bounds` (falls back to a zero-width
    interval with a single positive-depth sample); ``method="empirical"``
    takes the spread of slopes fitted separately to each of ``groups``.
    """
    if not samples:
        raise DegenerateFit("no samples")
    bands = {s.band for s in samples}
    if len(bands) != 1:
        raise InvalidInput("samples span more than one band")
    alpha = origin_slope(samples)
    d, l = _arrays(samples)
    residuals = tuple(float(r) for r in l - alpha * d)

    if method == "ci":
        if np.count_nonzero(d > 0) >= 2:
            lo, hi = slope_bounds(samples, alpha, level)
        else:
            lo = hi = alpha
    elif method == "empirical":
        if groups is None:
            raise InvalidInput("empirical bounds need sub-fit groups")
        lo, hi = empirical_bounds(groups)
    else:
        raise InvalidInput(f"bounds method must be one of {BOUND_METHODS}, got {method!r}")
    # bounds must bracket the point estimate even if sub-fits all land on one side
    lo, hi = min(lo, alpha), max(hi, alpha)
    return FitResult(bands.pop(), alpha, lo, hi, residuals, len(samples), method)


def build_model(fits: Iterable[FitResult]) -> VegLossModel:
    """Assemble fits into a contiguous model; negative slopes are clamped to 0 with a warning."""
    entries = []
    for fit in sorted(fits, key=lambda f: f.band):
        lo, mid, hi = fit.alpha_min, fit.alpha, fit.alpha_max
        if lo < 0 or mid < 0 or hi < 0:
            warnings.warn(f"{fit.band}: negative fitted slope clamped to 0", stacklevel=2)
            lo, mid, hi = max(lo, 0.0), max(mid, 0.0), max(hi, 0.0)
        entries.append(ModelEntry(fit.band, lo, mid, hi))
    for prev, cur in zip(entries, entries[1:]):
        if cur.band.f_low != prev.band.f_high:
            kind = "overlap" if cur.band.f_low < prev.band.f_high else "gap"
            raise BandCoverageError(f"{kind} between {prev.band} and {cur.band}")
    return VegLossModel(entries)
