"""Voxelization of stacked structures for finite-volume heat conduction.

Voxel arrays are shaped ``(nz, ny, nx)`` so that the C-order linear index
runs z-major, then y, then x — the ordering used for deterministic
hotspot tie-breaking.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Union

import numpy as np

from ..errors import ConfigError, GeometryError, ResourceError
from ..materials import Material
from ..stack import StackModel

DEFAULT_VOXEL_BUDGET = 500_000

FACES = ("x-", "x+", "y-", "y+", "z-", "z+")


@dataclass(frozen=True)
class FixedTemperature:
    """Dirichlet face held at a constant temperature."""

    temperature: float


@dataclass(frozen=True)
class Adiabatic:
    """Perfectly insulating face."""


@dataclass(frozen=True)
class Convective:
    """Film boundary: flux = h * (T_surface - T_ambient)."""

    film_coefficient: float
    ambient: float

    def __post_init__(self):
        if self.film_coefficient <= 0:
            raise ConfigError("film coefficient must be > 0")


BoundaryCondition = Union[FixedTemperature, Adiabatic, Convective]


def default_boundaries() -> dict:
    """Bottom face held at 300 K (heatsink), all other faces adiabatic."""
    bcs: dict = {face: Adiabatic() for face in FACES}
    bcs["z-"] = FixedTemperature(300.0)
    return bcs


@dataclass(frozen=True)
class VoxelGrid:
    """Regular voxel lattice with per-voxel material and face boundaries."""

    pitch: tuple                      # (px, py, pz) in m
    material_id: np.ndarray           # (nz, ny, nx) integer ids
    materials: tuple                  # id -> Material
    boundaries: Mapping[str, BoundaryCondition] = field(
        default_factory=default_boundaries)

    def __post_init__(self):
        if len(self.pitch) != 3 or any(p <= 0 for p in self.pitch):
            raise ConfigError("voxel pitch must be three positive lengths")
        if self.material_id.ndim != 3:
            raise ConfigError("material ids must be a 3-d array")
        if not self.materials:
            raise ConfigError("grid needs at least one material")
        ids = self.material_id
        if ids.min() < 0 or ids.max() >= len(self.materials):
            raise ConfigError("voxel material id out of range")
        missing = [f for f in FACES if f not in self.boundaries]
        if missing:
            raise ConfigError(f"missing boundary condition for faces {missing}")

    @property
    def nx(self) -> int:
        return self.material_id.shape[2]

    @property
    def ny(self) -> int:
        return self.material_id.shape[1]

    @property
    def nz(self) -> int:
        return self.material_id.shape[0]

    @property
    def n_voxels(self) -> int:
        return self.material_id.size

    def linear_index(self, i: int, j: int, k: int) -> int:
        """Linear index of voxel (i=x, j=y, k=z)."""
        return (k * self.ny + j) * self.nx + i

    def conductivity(self) -> np.ndarray:
        """Per-voxel thermal conductivity, same shape as material_id."""
        k_of = np.array([m.thermal_conductivity for m in self.materials])
        return k_of[self.material_id]

    def heat_capacity(self) -> np.ndarray:
        """Per-voxel heat capacity C = c_vol * voxel volume (J/K)."""
        c_of = np.array([m.volumetric_heat_capacity for m in self.materials])
        vol = self.pitch[0] * self.pitch[1] * self.pitch[2]
        return c_of[self.material_id] * vol

    def box_voxels(self, x0: float, x1: float, y0: float, y1: float,
                   z0: float, z1: float) -> np.ndarray:
        """Linear indices of voxels whose centers fall inside a box."""
        px, py, pz = self.pitch
        xi = np.arange(self.nx) * px + px / 2
        yj = np.arange(self.ny) * py + py / 2
        zk = np.arange(self.nz) * pz + pz / 2
        mask = ((zk[:, None, None] >= z0) & (zk[:, None, None] <= z1)
                & (yj[None, :, None] >= y0) & (yj[None, :, None] <= y1)
                & (xi[None, None, :] >= x0) & (xi[None, None, :] <= x1))
        return np.flatnonzero(mask.ravel())


PowerValue = Union[float, Callable[[float], float], tuple]


@dataclass(frozen=True)
class PowerSource:
    """Power injected uniformly over a set of voxels.

    ``power`` is a constant (W), a callable t -> W, or a (times, watts)
    pair interpolated piecewise-linearly (clamped outside the table).
    """

    voxels: np.ndarray
    power: PowerValue

    def __post_init__(self):
        object.__setattr__(self, "voxels",
                           np.unique(np.asarray(self.voxels, dtype=np.intp)))
        if self.voxels.size == 0:
            raise ConfigError("power source has an empty voxel set")
        if isinstance(self.power, (int, float)) and self.power < 0:
            raise ConfigError("source power must be >= 0")
        if isinstance(self.power, tuple):
            times, watts = (np.asarray(v, dtype=float) for v in self.power)
            if times.ndim != 1 or times.shape != watts.shape or times.size == 0:
                raise ConfigError("power waveform needs matching time/value arrays")
            if np.any(np.diff(times) <= 0):
                raise ConfigError("waveform times must be strictly increasing")
            if np.any(watts < 0):
                raise ConfigError("source power must be >= 0")
            object.__setattr__(self, "power", (times, watts))

    @property
    def is_constant(self) -> bool:
        return isinstance(self.power, (int, float))

    def value_at(self, t: float) -> float:
        if isinstance(self.power, (int, float)):
            return float(self.power)
        if isinstance(self.power, tuple):
            times, watts = self.power
            return float(np.interp(t, times, watts))
        p = float(self.power(t))
        if p < 0:
            raise ConfigError(f"source power waveform negative at t={t:g} s")
        return p


@dataclass(frozen=True)
class PowerMap:
    """Collection of power sources addressed by voxel index sets."""

    sources: tuple

    def __post_init__(self):
        object.__setattr__(self, "sources", tuple(self.sources))

    def validate(self, n_voxels: int) -> None:
        for s in self.sources:
            if s.voxels.max() >= n_voxels:
                raise ConfigError("power source voxel index out of grid")

    def steady_vector(self, n_voxels: int) -> np.ndarray:
        """Power per voxel for a steady solve (constant sources only)."""
        self.validate(n_voxels)
        p = np.zeros(n_voxels)
        for s in self.sources:
            if not s.is_constant:
                raise ConfigError("steady solve requires constant powers")
            p[s.voxels] += s.value_at(0.0) / s.voxels.size
        return p

    def vector_at(self, t: float, n_voxels: int) -> np.ndarray:
        p = np.zeros(n_voxels)
        for s in self.sources:
            p[s.voxels] += s.value_at(t) / s.voxels.size
        return p

    @property
    def total_constant_power(self) -> float:
        return sum(s.value_at(0.0) for s in self.sources if s.is_constant)


def _suggest_pitch(pitch: tuple, count: int, budget: int) -> float:
    scale = (count / budget) ** (1.0 / 3.0)
    return max(pitch) * scale * 1.02


def _rotate_offset(dx: float, dy: float, rotation: int):
    """Rotate a query offset by -rotation (quarter turns) for containment."""
    for _ in range((rotation // 90) % 4):
        dx, dy = dy, -dx
    return dx, dy


def voxelize(model: StackModel, pitch,
             budget: int = DEFAULT_VOXEL_BUDGET,
             boundaries: Mapping[str, BoundaryCondition] | None = None) -> VoxelGrid:
    """Rasterize a stack model onto a voxel lattice.

    ``pitch`` is a single length or an (px, py, pz) triple.  Each voxel
    takes the material occupying its center: the layer substrate, unless a
    placed via module's cross-section covers the point, in which case the
    via segment material wins.  Layer boundaries must land within one
    voxel of a z-pitch multiple.
    """
    if isinstance(pitch, (int, float)):
        pitch = (float(pitch),) * 3
    px, py, pz = (float(p) for p in pitch)
    if min(px, py, pz) <= 0:
        raise ConfigError("voxel pitch must be > 0")

    extents = {(lay.extent_x, lay.extent_y) for lay in model.layers}
    if len(extents) != 1:
        raise ConfigError("voxelize requires all layers to share one lateral extent")
    ex, ey = next(iter(extents))

    nx = max(1, round(ex / px))
    ny = max(1, round(ey / py))
    thicknesses = [lay.thickness for lay in model.layers]
    for t in thicknesses:
        if abs(round(t / pz) * pz - t) > pz:
            raise ConfigError(
                f"z pitch {pz:g} m does not divide layer thickness {t:g} m "
                "within one voxel")
    total = sum(thicknesses)
    nz = max(1, round(total / pz))
    count = nx * ny * nz
    if count > budget:
        raise ResourceError(
            f"{count} voxels exceed budget {budget}; "
            f"try pitch >= {_suggest_pitch((px, py, pz), count, budget):.3e} m")

    # Material table: layer substrates first, then via segment materials.
    materials: list[Material] = []
    mat_index: dict[int, int] = {}

    def mat_id(m: Material) -> int:
        key = id(m)
        if key not in mat_index:
            mat_index[key] = len(materials)
            materials.append(m)
        return mat_index[key]

    layer_tops = np.cumsum(thicknesses)
    layer_bottoms = layer_tops - np.asarray(thicknesses)
    zc = (np.arange(nz) + 0.5) * pz
    layer_of_z = np.clip(np.searchsorted(layer_tops, zc, side="right"),
                         0, len(thicknesses) - 1)

    ids = np.empty((nz, ny, nx), dtype=np.int16)
    for k in range(nz):
        ids[k, :, :] = mat_id(model.layers[int(layer_of_z[k])].material)

    xc = (np.arange(nx) + 0.5) * px
    yc = (np.arange(ny) + 0.5) * py

    for pl in model.placements:
        via = model.module_library[pl.module_id]
        lay = int(pl.layer)
        k_sel = np.flatnonzero(layer_of_z == lay)
        if k_sel.size == 0:
            continue
        t_lay = thicknesses[lay]
        z_bot = layer_bottoms[lay]
        half = max(abs(b) for b in via.footprint())
        i_sel = np.flatnonzero(np.abs(xc - pl.x) <= half + px)
        j_sel = np.flatnonzero(np.abs(yc - pl.y) <= half + py)
        if i_sel.size == 0 or j_sel.size == 0:
            continue
        seg_tops = np.cumsum([s.length for s in via.segments])
        for k in k_sel:
            rel = (zc[k] - z_bot) / t_lay            # 0..1 through the layer
            z_via = rel * via.length
            s_idx = min(int(np.searchsorted(seg_tops, z_via, side="right")),
                        len(via.segments) - 1)
            seg = via.segments[s_idx]
            m = mat_id(seg.material)
            for j in j_sel:
                for i in i_sel:
                    dx, dy = _rotate_offset(xc[i] - pl.x, yc[j] - pl.y,
                                            pl.rotation)
                    for placed in seg.cross_section.placed:
                        if placed.shape.contains(dx, dy):
                            ids[k, j, i] = m
                            break
    bcs = default_boundaries() if boundaries is None else dict(boundaries)
    return VoxelGrid((px, py, pz), ids, tuple(materials), bcs)


def device_voxel_sets(model: StackModel, grid: VoxelGrid) -> dict:
    """Voxel sets covered by each device site, keyed dev0, dev1, ...

    A device occupies the topmost voxel slab of its layer over its
    footprint (power dissipates at the active surface).
    """
    px, py, pz = grid.pitch
    thicknesses = [lay.thickness for lay in model.layers]
    layer_tops = np.cumsum(thicknesses)
    out = {}
    for n, dev in enumerate(model.devices):
        z_top = layer_tops[dev.layer]
        k = min(grid.nz - 1, max(0, int(math.ceil(z_top / pz)) - 1))
        vox = grid.box_voxels(dev.x - dev.w / 2, dev.x + dev.w / 2,
                              dev.y - dev.h / 2, dev.y + dev.h / 2,
                              k * pz, (k + 1) * pz)
        if vox.size == 0:
            raise GeometryError(f"device {n} footprint covers no voxel centers")
        out[f"dev{n}"] = vox
    return out
