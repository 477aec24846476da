"""Cross-section construction, rasterization, and quadrant subdivision."""

import numpy as np
import pytest

from vialab.errors import GeometryError, ResourceError
from vialab.geometry import (Circle, CrossSection, Placed, build_cross_section,
                             subdivide_quadrants)


def test_circle_mask_area_converges():
    r = 5e-6
    mask = build_cross_section(CrossSection.circle(r), cell_size=r / 40)
    area = np.count_nonzero(mask.labels >= 0) * mask.cell_size**2
    assert area == pytest.approx(np.pi * r * r, rel=5e-3)


def test_rectangle_mask_counts_exactly():
    mask = build_cross_section(CrossSection.rectangle(8e-6, 4e-6), cell_size=1e-6)
    assert np.count_nonzero(mask.labels >= 0) == 32


def test_square_tube_mask_is_hollow():
    outer, wall = 10e-6, 2e-6
    mask = build_cross_section(CrossSection.square_tube(outer, wall), cell_size=0.5e-6)
    area = np.count_nonzero(mask.labels >= 0) * mask.cell_size**2
    assert area == pytest.approx(outer**2 - (outer - 2 * wall) ** 2, rel=2e-2)
    # center cell is not conductor
    ny, nx = mask.labels.shape
    assert mask.labels[ny // 2, nx // 2] < 0


def test_composite_assigns_group_ids():
    section = CrossSection.composite([
        Placed(Circle(0.0, 0.0, 1e-6), group_id=0, current_sign=+1),
        Placed(Circle(5e-6, 0.0, 1e-6), group_id=1, current_sign=-1),
    ])
    mask = build_cross_section(section, cell_size=5e-8)
    assert set(int(g) for g in np.unique(mask.labels[mask.labels >= 0])) == {0, 1}
    assert mask.group_signs == {0: +1, 1: -1}


def test_cell_budget_is_enforced():
    with pytest.raises(ResourceError):
        build_cross_section(CrossSection.circle(1e-3), cell_size=1e-7,
                            cell_budget=250_000)


def test_bad_dimensions_raise():
    with pytest.raises(GeometryError):
        CrossSection.circle(0.0)
    with pytest.raises(GeometryError):
        CrossSection.square_tube(1e-6, 0.6e-6)  # walls overlap


def test_subdivide_quadrants_preserves_cells_in_one_group():
    r = 5e-6
    mask = build_cross_section(CrossSection.circle(r), cell_size=r / 25)
    quad = subdivide_quadrants(mask, spacing=4 * r)
    # cell multiset is preserved exactly, so DC resistance is unchanged
    assert (np.count_nonzero(quad.labels >= 0)
            == np.count_nonzero(mask.labels >= 0))
    # the pieces stay one electrical group (parallel at both ends)
    assert set(int(g) for g in np.unique(quad.labels[quad.labels >= 0])) == {0}
    assert quad.labels.shape[0] > mask.labels.shape[0]


def test_subdivide_rejects_negative_spacing():
    mask = build_cross_section(CrossSection.circle(1e-6), cell_size=5e-8)
    with pytest.raises(GeometryError):
        subdivide_quadrants(mask, spacing=-1e-6)
