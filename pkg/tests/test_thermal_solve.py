"""Steady and transient finite-volume heat solves."""

import numpy as np
import pytest

from vialab.errors import ConfigError
from vialab.materials import DEFAULT_MATERIALS
from vialab.stack import DeviceSite, Layer, assemble_stack
from vialab.thermal.grid import (Adiabatic, FixedTemperature, PowerMap,
                                 PowerSource, default_boundaries,
                                 device_voxel_sets, voxelize)
from vialab.thermal.solve import solve_steady, solve_transient

SI = DEFAULT_MATERIALS["silicon"]


def rod_grid(n=40):
    """A 1-D rod: uniform heating, both ends pinned, sides adiabatic."""
    lay = Layer(1e-3, 1e-4, 1e-4, SI)
    model = assemble_stack([lay], [], {})
    bounds = {**default_boundaries(),
              "z-": FixedTemperature(300.0), "z+": FixedTemperature(300.0)}
    return voxelize(model, (1e-4, 1e-4, 1e-3 / n), boundaries=bounds)


def test_uniformly_heated_rod_matches_closed_form():
    """Peak rise of a uniformly heated pinned rod is q''' L^2 / (8 k)."""
    grid = rod_grid(n=80)
    q_total = 1.0
    power = PowerMap((PowerSource(np.arange(grid.n_voxels), q_total),))
    sol = solve_steady(grid, power)
    length, area = 1e-3, 1e-8
    want = 300.0 + q_total / (length * area) * length**2 / (
        8.0 * SI.thermal_conductivity)
    assert sol.t_max == pytest.approx(want, rel=0.01)


def test_energy_residual_is_tiny():
    grid = rod_grid()
    power = PowerMap((PowerSource(np.arange(grid.n_voxels), 2.0),))
    sol = solve_steady(grid, power)
    assert sol.energy_residual < 1e-6


def test_all_adiabatic_faces_rejected():
    lay = Layer(1e-3, 1e-4, 1e-4, SI)
    grid = voxelize(assemble_stack([lay], [], {}), (1e-4, 1e-4, 5e-5),
                    boundaries={f: Adiabatic() for f in
                                ("x-", "x+", "y-", "y+", "z-", "z+")})
    with pytest.raises(ConfigError):
        solve_steady(grid, PowerMap((PowerSource(np.array([0]), 1.0),)))


def test_hotspot_location_follows_the_source():
    lay = Layer(100e-6, 1e-3, 1e-3, SI)
    model = assemble_stack(
        [lay], [], {},
        devices=(DeviceSite(0, 0.75e-3, 0.5e-3, 1e-4, 1e-4),))
    grid = voxelize(model, (25e-6, 25e-6, 25e-6))
    sets = device_voxel_sets(model, grid)
    sol = solve_steady(grid, PowerMap((PowerSource(sets["dev0"], 0.2),)))
    i, j, k = sol.hotspot
    # hotspot x index near 0.75 mm / 25 um = 30
    assert 27 <= i <= 33
    assert 17 <= j <= 23
    assert k == grid.nz - 1


def test_port_temperatures_average_their_voxels():
    grid = rod_grid()
    ports = {"mid": np.array([grid.n_voxels // 2])}
    power = PowerMap((PowerSource(np.arange(grid.n_voxels), 1.0),))
    sol = solve_steady(grid, power, ports=ports)
    t = sol.temperature.ravel()
    assert sol.port_temperatures["mid"] == pytest.approx(
        t[grid.n_voxels // 2])


def test_transient_relaxes_to_steady_state():
    grid = rod_grid(n=20)
    power = PowerMap((PowerSource(np.arange(grid.n_voxels), 1.0),))
    steady = solve_steady(grid, power)
    # diffusion time L^2/alpha with alpha = k/c ~ 9e-5 m^2/s -> ~11 ms
    res = solve_transient(grid, power, dt=2e-4, t_end=6e-2,
                          ports={"peak": np.array([grid.n_voxels // 2])})
    assert res.final.max() == pytest.approx(steady.t_max, rel=1e-3)
    trace = res.traces["peak"]
    assert trace[0] < trace[-1]
    assert np.all(np.diff(trace) > -1e-9)  # monotone heat-up


def test_transient_starts_from_ambient():
    grid = rod_grid(n=20)
    power = PowerMap((PowerSource(np.array([0]), 0.0),))
    res = solve_transient(grid, power, dt=1e-3, t_end=5e-3)
    assert np.allclose(res.final, 300.0)
