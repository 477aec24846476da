"""Voxel finite-volume thermal analysis: steady, transient, RC extraction."""

from .grid import (
    DEFAULT_VOXEL_BUDGET,
    Adiabatic,
    BoundaryCondition,
    Convective,
    FixedTemperature,
    PowerMap,
    PowerSource,
    VoxelGrid,
    default_boundaries,
    device_voxel_sets,
    voxelize,
)
from .network import ThermalNetwork, extract_thermal_network, insert_thermal_vias
from .solve import (
    ThermalSolution,
    TransientResult,
    assemble,
    solve_steady,
    solve_transient,
)

__all__ = [
    "DEFAULT_VOXEL_BUDGET",
    "Adiabatic",
    "BoundaryCondition",
    "Convective",
    "FixedTemperature",
    "PowerMap",
    "PowerSource",
    "ThermalNetwork",
    "ThermalSolution",
    "TransientResult",
    "VoxelGrid",
    "assemble",
    "default_boundaries",
    "device_voxel_sets",
    "extract_thermal_network",
    "insert_thermal_vias",
    "solve_steady",
    "solve_transient",
    "voxelize",
]
