"""Parameterized via geometry at three detail levels.

Levels are encoded as data, not types: a via is a list of body segments
(each a cross-section extruded over a length) plus layered connection and
metallization regions.  Raising the detail level only ever splits entries of
the previous level's lists, so any solver that consumes the lists is
level-agnostic.

  level 1  one homogeneous body segment, one connection layer, one
           metallization layer
  level 2  the body is split into sub-segments tracing the vertical shape
           (taper), and both pad regions are split in two
  level 3  additionally resolves the metallization region into >= 2
           sub-layers with individual materials
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ConfigError
from .geometry import CrossSection
from .materials import Material


@dataclass(frozen=True)
class RegionLayer:
    thickness: float
    material: Material


@dataclass(frozen=True)
class ViaSegment:
    length: float
    cross_section: CrossSection
    material: Material


@dataclass(frozen=True)
class ViaGeometry:
    detail_level: int
    segments: tuple          # of ViaSegment, top to bottom
    connection_region: tuple  # of RegionLayer
    metallization_region: tuple  # of RegionLayer

    def __post_init__(self):
        if self.detail_level not in (1, 2, 3):
            raise ConfigError("detail_level must be 1, 2, or 3")
        if self.length <= 0:
            raise ConfigError("via total length must be > 0")
        n_conn, n_met = len(self.connection_region), len(self.metallization_region)
        if self.detail_level == 1 and (n_conn != 1 or n_met != 1):
            raise ConfigError("level 1 must have exactly one layer per region")
        if self.detail_level >= 2 and (n_conn < 2 or n_met < 2):
            raise ConfigError("levels 2 and 3 need >= 2 sub-layers per region")

    @property
    def length(self) -> float:
        return sum(s.length for s in self.segments)

    @property
    def body_material(self) -> Material:
        return self.segments[0].material

    def footprint(self):
        """Bounding box of the widest body segment (for placement checks)."""
        xmin = ymin = float("inf")
        xmax = ymax = float("-inf")
        for s in self.segments:
            b = s.cross_section.bounds()
            xmin, ymin = min(xmin, b[0]), min(ymin, b[1])
            xmax, ymax = max(xmax, b[2]), max(ymax, b[3])
        return (xmin, ymin, xmax, ymax)


def _require(params: dict, key: str, level: int):
    if key not in params:
        raise ConfigError(f"via detail level {level} requires parameter {key!r}")
    return params[key]


def via_detail_model(level: int, params: dict) -> ViaGeometry:
    """Build a ViaGeometry from named parameters.

    Required parameters (all levels): diameter, length, material,
    connection_thickness, connection_material, metallization_thickness,
    metallization_material.  Level 2 reads the optional bottom_diameter
    (taper; defaults to diameter) and body_segments (default 4).  Level 3
    additionally reads metallization_sublayers (default 3) and optionally
    metallization_materials (list, cycled over the sub-layers).
    """
    if level not in (1, 2, 3):
        raise ConfigError(f"unknown detail level {level}")
    d_top = _require(params, "diameter", level)
    length = _require(params, "length", level)
    body_mat = _require(params, "material", level)
    conn_t = _require(params, "connection_thickness", level)
    conn_mat = _require(params, "connection_material", level)
    met_t = _require(params, "metallization_thickness", level)
    met_mat = _require(params, "metallization_material", level)

    if level == 1:
        segments = (ViaSegment(length, CrossSection.circle(d_top / 2), body_mat),)
        connection = (RegionLayer(conn_t, conn_mat),)
        metallization = (RegionLayer(met_t, met_mat),)
        return ViaGeometry(1, segments, connection, metallization)

    # level >= 2: vertical shape of the via body (piecewise-constant taper)
    d_bottom = params.get("bottom_diameter", d_top)
    n_body = int(params.get("body_segments", 4))
    if n_body < 2:
        raise ConfigError("body_segments must be >= 2 at detail level >= 2")
    segments = []
    for i in range(n_body):
        # diameter sampled at the segment midpoint of the linear taper
        frac = (i + 0.5) / n_body
        d = d_top + (d_bottom - d_top) * frac
        segments.append(ViaSegment(length / n_body, CrossSection.circle(d / 2), body_mat))
    connection = (RegionLayer(conn_t / 2, conn_mat), RegionLayer(conn_t / 2, conn_mat))

    if level == 2:
        metallization = (RegionLayer(met_t / 2, met_mat), RegionLayer(met_t / 2, met_mat))
    else:
        # split level 2's upper metallization half into thin sub-layers (liner/
        # seed/bulk style) so the level-3 list still nests inside level 2's
        n_met = int(params.get("metallization_sublayers", 3))
        if n_met < 3:
            raise ConfigError("metallization_sublayers must be >= 3 at level 3")
        mats = params.get("metallization_materials") or [met_mat]
        thin = met_t / 2 / (n_met - 1)
        layers = [RegionLayer(thin, mats[i % len(mats)]) for i in range(n_met - 1)]
        layers.append(RegionLayer(met_t / 2, mats[(n_met - 1) % len(mats)]))
        metallization = tuple(layers)
    return ViaGeometry(level, tuple(segments), connection, metallization)
