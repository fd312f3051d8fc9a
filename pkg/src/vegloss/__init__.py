"""Vegetation excess-loss toolkit for 6-18 GHz links.

Geometry (canopy ellipses -> vegetation depth), sounder post-processing
(frequency scans -> PDPs -> LoS power), origin-constrained slope fitting,
link-budget prediction and a synthetic forward model.
"""

__version__ = "0.1.0"

from ._accel import backend
from .errors import VegLossError
from .fitting import DepthLossSample, FitResult, build_model, fit_origin_constrained, slope_bounds
from .geometry import (PlanarPoint, RaySegment, SiteGeometry, TreeEllipse, chord_length, load_site,
                       project_to_vertical_plane, reference_site, tx_rx_distance, vegetation_depth)
from .propagation import (LinkBudgetInput, SubBand, VegLossModel, builtin_model, excess_loss, friis_db,
                          link_budget, predict_loss)
from .sounder import (CalibrationScan, DirectionalScanSet, FrequencyScan, PowerDelayProfile, calibrate,
                      compute_pdp, estimate_noise_floor, extract_los_power, gate_and_threshold,
                      select_best_alignment, subband_slice)
