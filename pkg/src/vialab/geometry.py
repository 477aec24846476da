"""Conductor cross-section shapes and their rasterization to cell masks.

Shapes live in the 2D plane transverse to the via axis.  A cross-section is
a list of placed shapes, each belonging to a conductor group (parallel
connected conductors share a group) with a nominal current direction.
Rasterization labels every cell of a regular grid by the group whose shape
contains the cell center; the mask is the input to the filament solver.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import GeometryError, ResourceError

DEFAULT_CELL_BUDGET = 250_000


@dataclass(frozen=True)
class Circle:
    cx: float
    cy: float
    r: float

    def __post_init__(self):
        if self.r <= 0:
            raise GeometryError("circle radius must be > 0")

    @property
    def area(self) -> float:
        return math.pi * self.r ** 2

    def bounds(self):
        return (self.cx - self.r, self.cy - self.r, self.cx + self.r, self.cy + self.r)

    def contains(self, x, y):
        return (x - self.cx) ** 2 + (y - self.cy) ** 2 <= self.r ** 2


@dataclass(frozen=True)
class Rectangle:
    """Axis-aligned rectangle, half-open on the max edges so that touching
    rectangles tile without double-claiming boundary cell centers."""

    cx: float
    cy: float
    w: float
    h: float

    def __post_init__(self):
        if self.w <= 0 or self.h <= 0:
            raise GeometryError("rectangle sides must be > 0")

    @property
    def area(self) -> float:
        return self.w * self.h

    def bounds(self):
        return (self.cx - self.w / 2, self.cy - self.h / 2,
                self.cx + self.w / 2, self.cy + self.h / 2)

    def contains(self, x, y):
        x0, y0, x1, y1 = self.bounds()
        return (x >= x0) & (x < x1) & (y >= y0) & (y < y1)


@dataclass(frozen=True)
class Polygon:
    """Simple (non-self-intersecting) polygon, vertices counterclockwise or
    clockwise; containment by the even-odd rule."""

    vertices: tuple

    def __post_init__(self):
        if len(self.vertices) < 3:
            raise GeometryError("polygon needs at least 3 vertices")
        if not self._shapely().is_simple:
            raise GeometryError("polygon is self-intersecting")

    def _shapely(self):
        from shapely.geometry import Polygon as ShapelyPolygon
        return ShapelyPolygon(self.vertices)

    @property
    def area(self) -> float:
        return self._shapely().area

    def bounds(self):
        xs = [v[0] for v in self.vertices]
        ys = [v[1] for v in self.vertices]
        return (min(xs), min(ys), max(xs), max(ys))

    def contains(self, x, y):
        from shapely import contains_xy
        return contains_xy(self._shapely(), x, y)


@dataclass(frozen=True)
class Placed:
    """A shape assigned to a conductor group with a nominal current sign."""

    shape: object
    group_id: int = 0
    current_sign: int = 1

    def __post_init__(self):
        if self.current_sign not in (1, -1):
            raise GeometryError("current_sign must be +1 or -1")


@dataclass(frozen=True)
class CrossSection:
    """One conductor system in the transverse plane: placed shapes grouped
    into parallel-connected conductors."""

    placed: tuple

    def __post_init__(self):
        groups = sorted({p.group_id for p in self.placed})
        if groups != list(range(len(groups))):
            raise GeometryError(f"group ids must be contiguous from 0, got {groups}")
        signs = {}
        for p in self.placed:
            if signs.setdefault(p.group_id, p.current_sign) != p.current_sign:
                raise GeometryError(f"group {p.group_id} mixes current signs")

    @classmethod
    def circle(cls, r: float) -> "CrossSection":
        return cls((Placed(Circle(0.0, 0.0, r)),))

    @classmethod
    def rectangle(cls, w: float, h: float) -> "CrossSection":
        return cls((Placed(Rectangle(0.0, 0.0, w, h)),))

    @classmethod
    def square_tube(cls, outer: float, wall: float) -> "CrossSection":
        """Closed hollow square conductor: four non-overlapping wall strips."""
        if not 0 < 2 * wall < outer:
            raise GeometryError("tube wall must satisfy 0 < 2*wall < outer")
        half, inner = outer / 2, outer - 2 * wall
        strips = (
            Rectangle(0.0, -(half - wall / 2), outer, wall),   # bottom
            Rectangle(0.0, +(half - wall / 2), outer, wall),   # top
            Rectangle(-(half - wall / 2), 0.0, wall, inner),   # left
            Rectangle(+(half - wall / 2), 0.0, wall, inner),   # right
        )
        return cls(tuple(Placed(s) for s in strips))

    @classmethod
    def composite(cls, placed) -> "CrossSection":
        return cls(tuple(placed))

    @property
    def n_groups(self) -> int:
        return 1 + max(p.group_id for p in self.placed)

    def group_signs(self) -> dict:
        return {p.group_id: p.current_sign for p in self.placed}

    def analytic_area(self, group_id: int) -> float:
        return sum(p.shape.area for p in self.placed if p.group_id == group_id)

    def bounds(self):
        bs = [p.shape.bounds() for p in self.placed]
        return (min(b[0] for b in bs), min(b[1] for b in bs),
                max(b[2] for b in bs), max(b[3] for b in bs))


@dataclass(frozen=True)
class CrossSectionMask:
    """Rasterized cross-section: labels[i, j] is the group id of the cell
    whose center is at (x0 + i*cell, y0 + j*cell), or -1 for empty cells."""

    cell_size: float
    x0: float  # center of cell (0, 0)
    y0: float
    labels: np.ndarray  # int16, shape (nx, ny)
    group_signs: dict = field(default_factory=dict)

    @property
    def nx(self) -> int:
        return self.labels.shape[0]

    @property
    def ny(self) -> int:
        return self.labels.shape[1]

    @property
    def n_groups(self) -> int:
        m = int(self.labels.max())
        return m + 1 if m >= 0 else 0

    def cell_centers(self):
        xs = self.x0 + self.cell_size * np.arange(self.nx)
        ys = self.y0 + self.cell_size * np.arange(self.ny)
        return np.meshgrid(xs, ys, indexing="ij")

    def area(self, group_id: int) -> float:
        return float(np.count_nonzero(self.labels == group_id)) * self.cell_size ** 2


def build_cross_section(section: CrossSection, cell_size: float,
                        cell_budget: int = DEFAULT_CELL_BUDGET) -> CrossSectionMask:
    """Rasterize a cross-section onto a cell grid aligned to the origin.

    The lattice is anchored at integer multiples of cell_size so that
    axis-aligned rectangle edges on the lattice rasterize exactly.  Each cell
    takes the group of the shape containing its center; two shapes claiming
    one center is an overlap error.  The labeled area per group must land
    within 2% of the analytic shape area or the cell size is rejected as too
    coarse.
    """
    if cell_size <= 0:
        raise GeometryError("cell_size must be > 0")
    xmin, ymin, xmax, ymax = section.bounds()
    i0 = math.floor(xmin / cell_size)
    j0 = math.floor(ymin / cell_size)
    nx = math.ceil(xmax / cell_size) - i0
    ny = math.ceil(ymax / cell_size) - j0
    if nx * ny > cell_budget:
        raise ResourceError(f"mask would need {nx * ny} cells (budget {cell_budget}); "
                            f"increase cell_size")
    x0 = (i0 + 0.5) * cell_size
    y0 = (j0 + 0.5) * cell_size
    labels = np.full((nx, ny), -1, dtype=np.int16)
    X, Y = np.meshgrid(x0 + cell_size * np.arange(nx),
                       y0 + cell_size * np.arange(ny), indexing="ij")
    for p in section.placed:
        inside = p.shape.contains(X, Y)
        if np.any(labels[inside] != -1):
            raise GeometryError("shapes overlap (two shapes claim the same cell center)")
        labels[inside] = p.group_id

    mask = CrossSectionMask(cell_size, x0, y0, labels, section.group_signs())
    for g in range(section.n_groups):
        analytic = section.analytic_area(g)
        err = abs(mask.area(g) - analytic) / analytic
        if err > 0.02:
            raise GeometryError(f"group {g} rasterized area off by {err:.1%} "
                                f"(> 2%); decrease cell_size")
    return mask


def subdivide_quadrants(mask: CrossSectionMask, spacing: float) -> CrossSectionMask:
    """Split a conductor mask into four quadrant pieces moved diagonally apart.

    Every labeled cell is translated by (+-spacing/2, +-spacing/2) according
    to its quadrant relative to the conductor's center, so the cell multiset
    (and therefore the DC resistance) is preserved exactly.  The spacing is
    rounded to the nearest even multiple of the cell size.  spacing is the
    edge-to-edge gap between facing quadrant pieces.
    """
    if spacing < 0:
        raise GeometryError("spacing must be >= 0")
    t = round(spacing / (2 * mask.cell_size))
    if t == 0:
        return mask
    ii, jj = np.nonzero(mask.labels >= 0)
    # quadrants relative to the occupied bounding-box center
    ci = (ii.min() + ii.max()) / 2
    cj = (jj.min() + jj.max()) / 2
    di = np.where(ii > ci, t, -t)
    dj = np.where(jj > cj, t, -t)
    ni, nj = ii + di + t, jj + dj + t
    labels = np.full((mask.nx + 2 * t, mask.ny + 2 * t), -1, dtype=np.int16)
    labels[ni, nj] = mask.labels[ii, jj]
    return CrossSectionMask(mask.cell_size,
                            mask.x0 - t * mask.cell_size,
                            mask.y0 - t * mask.cell_size,
                            labels, dict(mask.group_signs))
