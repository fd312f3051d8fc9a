"""Vegetation depth along the Tx-Rx ray through elliptical tree canopies.

Trees are reduced to axis-aligned ellipses in the vertical plane containing
the Tx and Rx.  The depth for a receiver is the summed chord length of the
LoS segment through every canopy ellipse (overlaps are counted twice).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

from . import _yaml
from ._kernels import chord_lengths
from .errors import InvalidGeometry, NotFound, ParseError

DEFAULT_LATERAL_RADIUS = 5.0
REFERENCE_SITE = "usc_mcclintock"


@dataclass(frozen=True)
class PlanarPoint:
    x: float
    z: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.z)):
            raise InvalidGeometry(f"non-finite point ({self.x}, {self.z})")


@dataclass(frozen=True)
class TreeEllipse:
    center: PlanarPoint
    a: float
    b: float
    label: str = ""

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise InvalidGeometry(f"ellipse {self.label!r}: semi-axes must be > 0, got a={self.a}, b={self.b}")


@dataclass(frozen=True)
class RaySegment:
    start: PlanarPoint
    end: PlanarPoint

    def __post_init__(self):
        if self.start == self.end:
            raise InvalidGeometry("ray segment has coincident endpoints")

    @property
    def length(self) -> float:
        return math.hypot(self.end.x - self.start.x, self.end.z - self.start.z)


@dataclass(frozen=True)
class Tree:
    """A surveyed tree: ground-plane centroid plus canopy box dimensions."""

    id: str
    easting: float
    northing: float
    canopy_center_height: float
    canopy_width: float
    canopy_height: float

    def __post_init__(self):
        if not (self.canopy_width > 0 and self.canopy_height > 0):
            raise InvalidGeometry(f"tree {self.id!r}: canopy width and height must be > 0")


@dataclass(frozen=True)
class RxPoint:
    id: str
    position: tuple[float, float, float]


@dataclass(frozen=True)
class SiteGeometry:
    tx: tuple[float, float, float]
    rx_points: tuple[RxPoint, ...]
    trees: tuple[Tree, ...] = ()
    lateral_inclusion_radius: float = DEFAULT_LATERAL_RADIUS
    name: str = ""

    def __post_init__(self):
        ids = [r.id for r in self.rx_points]
        if len(set(ids)) != len(ids):
            raise InvalidGeometry("duplicate Rx ids")
        if not self.tx[2] > 0:
            raise InvalidGeometry("tx height must be > 0")
        if self.lateral_inclusion_radius < 0:
            raise InvalidGeometry("lateral_inclusion_radius must be >= 0")
        for r in self.rx_points:
            if tuple(map(float, r.position)) == tuple(map(float, self.tx)):
                raise InvalidGeometry(f"Rx {r.id!r} coincides with the Tx")

    def rx(self, rx_id: str) -> RxPoint:
        for r in self.rx_points:
            if r.id == rx_id:
                return r
        raise NotFound(f"unknown rx_id {rx_id!r}")

    @property
    def rx_ids(self) -> list[str]:
        return sorted(r.id for r in self.rx_points)


def project_to_vertical_plane(site: SiteGeometry, rx_id: str) -> tuple[RaySegment, list[TreeEllipse]]:
    """Reduce the site to the Tx-Rx vertical plane.

    x runs along the ground track from the Tx foot point; z is height.
    Trees whose centroid lies further than ``lateral_inclusion_radius`` from
    the (infinite) ground track are dropped.
    """
    rx = site.rx(rx_id)
    tx_e, tx_n, tx_h = site.tx
    rx_e, rx_n, rx_h = rx.position
    track = np.array([rx_e - tx_e, rx_n - tx_n])
    ground = float(np.hypot(*track))
    if ground == 0.0:
        if rx_h == tx_h:
            raise InvalidGeometry(f"rx {rx_id!r} coincides with tx")
        raise InvalidGeometry(f"rx {rx_id!r} is directly below/above tx; vertical plane undefined")
    unit = track / ground
    ray = RaySegment(PlanarPoint(0.0, tx_h), PlanarPoint(ground, rx_h))

    ellipses = []
    for tree in site.trees:
        rel = np.array([tree.easting - tx_e, tree.northing - tx_n])
        along = float(rel @ unit)
        across = abs(float(rel[0] * unit[1] - rel[1] * unit[0]))
        if across <= site.lateral_inclusion_radius:
            ellipses.append(TreeEllipse(PlanarPoint(along, tree.canopy_center_height),
                                        tree.canopy_width / 2.0, tree.canopy_height / 2.0, tree.id))
    return ray, ellipses


def chord_length(ellipse: TreeEllipse, ray: RaySegment) -> float:
    """Length of the part of ``ray`` inside the closed ``ellipse`` (0 if tangent or disjoint)."""
    if not (ellipse.a > 0 and ellipse.b > 0):
        raise InvalidGeometry("degenerate ellipse")
    out = chord_lengths(ray.start.x, ray.start.z, ray.end.x, ray.end.z,
                        ellipse.center.x, ellipse.center.z, ellipse.a, ellipse.b)
    return float(out[0])


def total_chord(ellipses: Sequence[TreeEllipse], ray: RaySegment) -> float:
    if not ellipses:
        return 0.0
    cx = np.array([e.center.x for e in ellipses])
    cz = np.array([e.center.z for e in ellipses])
    a = np.array([e.a for e in ellipses])
    b = np.array([e.b for e in ellipses])
    lengths = chord_lengths(ray.start.x, ray.start.z, ray.end.x, ray.end.z, cx, cz, a, b)
    return float(lengths.sum())


def vegetation_depth(site: SiteGeometry, rx_id: str) -> float:
    ray, ellipses = project_to_vertical_plane(site, rx_id)
    return total_chord(ellipses, ray)


def tx_rx_distance(site: SiteGeometry, rx_id: str) -> float:
    rx = site.rx(rx_id)
    d = math.dist(site.tx, rx.position)
    if d <= 0:
        raise InvalidGeometry(f"rx {rx_id!r} coincides with tx")
    return d


# --- site description files ----------------------------------------------------

_TOP_REQUIRED = ("units", "tx", "rx_points", "trees")
_TOP_OPTIONAL = ("name", "lateral_inclusion_radius")
_TREE_KEYS = ("id", "easting", "northing", "canopy_center_height", "canopy_width", "canopy_height")
_RX_KEYS = ("id", "easting", "northing", "height")


def parse_site(text: str, source: str = "<site>") -> SiteGeometry:
    """Parse a YAML site description.

    Unknown keys anywhere, a missing ``units`` section, or a length unit
    other than metres are rejected with the offending line number.
    """
    root = _yaml.load(text, source)
    _yaml.check_keys(root, _TOP_REQUIRED, _TOP_OPTIONAL, source, "site")

    units = root["units"]
    _yaml.check_keys(units, ("length",), (), source, "units")
    if units["length"] != "m":
        raise ParseError(f"unsupported length unit {units['length']!r} (only 'm')", source,
                         units.key_lines["length"])

    tx = root["tx"]
    _yaml.check_keys(tx, ("easting", "northing", "height"), (), source, "tx")
    tx_pos = tuple(_yaml.number(tx, k, source) for k in ("easting", "northing", "height"))
    if tx_pos[2] <= 0:
        raise ParseError("tx height must be > 0", source, tx.key_lines["height"])

    if not isinstance(root["rx_points"], list):
        raise ParseError("rx_points must be a list", source, root.key_lines["rx_points"])
    rx_points = []
    seen = set()
    for item in root["rx_points"]:
        _yaml.check_keys(item, _RX_KEYS, (), source, "rx point")
        rid = _yaml.text(item, "id", source)
        if rid in seen:
            raise ParseError(f"duplicate rx id {rid!r}", source, item.key_lines["id"])
        seen.add(rid)
        rx_points.append(RxPoint(rid, tuple(_yaml.number(item, k, source) for k in _RX_KEYS[1:])))

    trees_node = root["trees"]
    if trees_node is None:
        trees_node = []
    if not isinstance(trees_node, list):
        raise ParseError("trees must be a list", source, root.key_lines["trees"])
    trees = []
    for item in trees_node:
        _yaml.check_keys(item, _TREE_KEYS, (), source, "tree")
        vals = [_yaml.number(item, k, source) for k in _TREE_KEYS[1:]]
        for k in ("canopy_width", "canopy_height"):
            if item[k] <= 0:
                raise ParseError(f"{k} must be > 0", source, item.key_lines[k])
        trees.append(Tree(_yaml.text(item, "id", source), *vals))

    radius = DEFAULT_LATERAL_RADIUS
    if "lateral_inclusion_radius" in root:
        radius = _yaml.number(root, "lateral_inclusion_radius", source, positive=True)
    name = str(root.get("name", ""))
    return SiteGeometry(tx_pos, tuple(rx_points), tuple(trees), radius, name)


def load_site(path) -> SiteGeometry:
    """Load a site file; the bare name ``usc_mcclintock`` selects the shipped reference site."""
    path = str(path)
    if path == REFERENCE_SITE:
        return reference_site()
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read site file: {exc.strerror}", path) from None
    return parse_site(text, path)


def reference_site_text() -> str:
    return resources.files("vegloss.data").joinpath(f"{REFERENCE_SITE}.yaml").read_text()


def reference_site() -> SiteGeometry:
    return parse_site(reference_site_text(), f"{REFERENCE_SITE}.yaml")


def dump_site(site: SiteGeometry) -> str:
    """Serialise ``site`` to the YAML format read by :func:`parse_site`."""
    def num(v):
        return repr(float(v))

    lines = []
    if site.name:
        lines.append(f"name: {site.name}")
    lines += ["units:", "  length: m",
              f"lateral_inclusion_radius: {num(site.lateral_inclusion_radius)}",
              "tx:",
              f"  easting: {num(site.tx[0])}",
              f"  northing: {num(site.tx[1])}",
              f"  height: {num(site.tx[2])}",
              "rx_points:"]
    for r in site.rx_points:
        e, n, h = r.position
        lines.append(f"  - {{id: {r.id}, easting: {num(e)}, northing: {num(n)}, height: {num(h)}}}")
    if site.trees:
        lines.append("trees:")
        for t in site.trees:
            lines.append(
                f"  - {{id: {t.id}, easting: {num(t.easting)}, northing: {num(t.northing)}, "
                f"canopy_center_height: {num(t.canopy_center_height)}, "
                f"canopy_width: {num(t.canopy_width)}, canopy_height: {num(t.canopy_height)}}}")
    else:
        lines.append("trees: []")
    return "\n".join(lines) + "\n"
