"""Volume-filament impedance solver: DC closed forms, skin effect, grouping."""

import numpy as np
import pytest

from vialab.errors import ConfigError
from vialab.geometry import CrossSection, build_cross_section
from vialab.materials import DEFAULT_MATERIALS
from vialab.em.filaments import (default_frequency_grid, discretize_filaments,
                                 solve_impedance, sweep_frequency)
from vialab.em.roundwire import round_wire_oracle

CU = DEFAULT_MATERIALS["copper"]


def circle_system(radius=5e-6, cell_frac=20):
    mask = build_cross_section(CrossSection.circle(radius), cell_size=radius / cell_frac)
    return discretize_filaments(mask, CU)


def test_dc_resistance_matches_cell_area():
    sys = circle_system()
    sample, _ = solve_impedance(sys, 0.0)
    total_area = float(np.sum(sys.area))
    assert sample.z_group[0].real == pytest.approx(
        1.0 / (CU.electrical_conductivity * total_area), rel=1e-9)
    assert sample.z_group[0].imag == 0.0


def test_dc_inductance_via_perturbation_is_finite():
    sys = circle_system()
    sample, _ = solve_impedance(sys, 0.0)
    # the internal inductance of a round wire is mu0/8pi ~ 50 nH/m; the
    # total includes the loop-closure reference so just require a sane scale
    assert 1e-9 < sample.l_group[0] < 5e-6


def test_ac_resistance_tracks_round_wire_ratio():
    radius = 5e-6
    sys = circle_system(radius, cell_frac=24)
    r_dc = solve_impedance(sys, 0.0)[0].z_group[0].real
    for f in (1e8, 1e9):
        sample, _ = solve_impedance(sys, f)
        want = round_wire_oracle(radius, CU.electrical_conductivity, f) * r_dc
        assert sample.z_group[0].real == pytest.approx(want, rel=0.03)


def test_current_density_crowds_to_surface():
    radius = 5e-6
    sys = circle_system(radius, cell_frac=24)
    _, cmap = solve_impedance(sys, 5e9)
    rr = np.hypot(cmap.x, cmap.y)
    inner = np.abs(cmap.normalized[rr < radius / 2]).mean()
    outer = np.abs(cmap.normalized[rr > 0.8 * radius]).mean()
    assert outer > 3 * inner


def test_impedance_matrix_is_symmetric():
    sys = circle_system()
    sample, _ = solve_impedance(sys, 1e9)
    z = sample.z_matrix
    assert np.allclose(z, z.T, rtol=1e-9, atol=0)


def test_sweep_collects_table_and_csv_rows():
    sys = circle_system()
    grid = np.array([0.0, 1e8, 1e9])
    table = sweep_frequency(sys, grid)
    assert table.frequencies.shape == (3,)
    assert table.z_group.shape == (3, 1)
    rows = list(table.csv_rows())
    assert len(rows) == 3            # one group, three frequencies
    # resistance column is monotone for a single solid conductor
    r = [row[2] for row in rows]
    assert r[0] <= r[1] <= r[2]


def test_sweep_threads_match_serial():
    sys = circle_system()
    grid = np.array([0.0, 1e8, 1e9, 5e9])
    serial = sweep_frequency(sys, grid, threads=1)
    threaded = sweep_frequency(sys, grid, threads=4)
    assert np.array_equal(serial.z_group, threaded.z_group)
    assert np.array_equal(serial.r_eff, threaded.r_eff)


def test_default_grid_is_dc_plus_40_log_points():
    grid = default_frequency_grid()
    assert grid[0] == 0.0
    assert len(grid) == 41
    assert grid[1] == pytest.approx(1e6)
    assert grid[-1] == pytest.approx(1e10)


def test_two_group_system_carries_opposite_currents():
    from vialab.geometry import Circle, Placed
    section = CrossSection.composite([
        Placed(Circle(0.0, 0.0, 2e-6), group_id=0, current_sign=+1),
        Placed(Circle(10e-6, 0.0, 2e-6), group_id=1, current_sign=-1),
    ])
    mask = build_cross_section(section, cell_size=0.1e-6)
    sys = discretize_filaments(mask, CU)
    sample, _ = solve_impedance(sys, 1e9)
    assert sample.z_group.shape == (2,)
    # proximity: the pair resistance exceeds the isolated-wire value
    iso = circle_system(2e-6, cell_frac=20)
    iso_r = solve_impedance(iso, 1e9)[0].z_group[0].real
    assert sample.z_group[0].real > iso_r


def test_unknown_material_type_rejected():
    mask = build_cross_section(CrossSection.circle(1e-6), cell_size=5e-8)
    with pytest.raises(ConfigError):
        discretize_filaments(mask, "copper")
