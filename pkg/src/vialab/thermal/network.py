"""Equivalent thermal RC network extracted from the voxel discretization.

The network IS the finite-volume system: G theta = B u with theta the
temperature rise over the (single) boundary reference temperature, u the
source powers, and y = L^T theta the observed port temperature rises.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np
import scipy.sparse
import scipy.sparse.linalg

from ..errors import ConfigError
from ..stack import StackModel, place_thermal_vias
from ..via import ViaGeometry
from .grid import Adiabatic, Convective, FixedTemperature, VoxelGrid
from .solve import assemble


@dataclass(frozen=True)
class ThermalNetwork:
    """Grounded RC network G, C with input map B and observation map L."""

    g: scipy.sparse.csr_matrix     # (n, n) W/K, SPD after boundary grounding
    c: np.ndarray                  # (n,) J/K
    b: scipy.sparse.csr_matrix     # (n, m) power injection map
    l: scipy.sparse.csr_matrix     # (n, p) volume-averaged observation map
    input_names: tuple
    port_names: tuple
    t_ref: float                   # K, boundary reference temperature

    @property
    def n_nodes(self) -> int:
        return self.g.shape[0]

    def steady_port_temperatures(self, powers) -> dict:
        """Absolute port temperatures for constant input powers (W)."""
        u = np.asarray(powers, dtype=float)
        if u.shape != (len(self.input_names),):
            raise ConfigError("one power per network input required")
        theta = scipy.sparse.linalg.spsolve(self.g.tocsc(), self.b @ u)
        rises = np.asarray(self.l.T @ theta).ravel()
        return {name: self.t_ref + float(r)
                for name, r in zip(self.port_names, rises)}

    def to_state_space(self):
        """View as a reducible descriptor system C theta' = -G theta + B u."""
        from ..mor import StateSpaceRC

        return StateSpaceRC(self.g, self.c, self.b, self.l,
                            input_names=self.input_names,
                            output_names=self.port_names)


def _selector(n: int, sets: Mapping[str, np.ndarray]) -> scipy.sparse.csr_matrix:
    rows, cols, vals = [], [], []
    for col, (_, vox) in enumerate(sets.items()):
        vox = np.asarray(vox, dtype=np.intp)
        if vox.size == 0:
            raise ConfigError("empty voxel set in network map")
        if vox.min() < 0 or vox.max() >= n:
            raise ConfigError("network voxel index out of grid")
        rows.extend(vox.tolist())
        cols.extend([col] * vox.size)
        vals.extend([1.0 / vox.size] * vox.size)
    return scipy.sparse.csr_matrix((vals, (rows, cols)), shape=(n, len(sets)))


def _reference_temperature(grid: VoxelGrid) -> float:
    refs = set()
    for bc in grid.boundaries.values():
        if isinstance(bc, FixedTemperature):
            refs.add(bc.temperature)
        elif isinstance(bc, Convective):
            refs.add(bc.ambient)
        elif not isinstance(bc, Adiabatic):
            raise ConfigError("unknown boundary condition")
    if not refs:
        raise ConfigError("network extraction needs a non-adiabatic boundary")
    if len(refs) > 1:
        raise ConfigError(
            "network extraction requires one common boundary reference "
            f"temperature, got {sorted(refs)}")
    return refs.pop()


def extract_thermal_network(grid: VoxelGrid, ports: Mapping[str, np.ndarray],
                            inputs: Mapping[str, np.ndarray] | None = None
                            ) -> ThermalNetwork:
    """Build the RC network whose steady solve matches solve_steady exactly.

    ``ports`` are named voxel sets observed by volume averaging; they must
    be pairwise disjoint.  ``inputs`` (defaulting to the ports) receive
    source powers split uniformly over their voxels.  All non-adiabatic
    boundaries must share one reference temperature so the network can be
    expressed in temperature rise over that reference.
    """
    if not ports:
        raise ConfigError("network extraction needs at least one port")
    seen: set = set()
    for name, vox in ports.items():
        s = set(np.asarray(vox, dtype=np.intp).tolist())
        if seen & s:
            raise ConfigError(f"port {name!r} overlaps another port")
        seen |= s
    if inputs is None:
        inputs = ports

    t_ref = _reference_temperature(grid)
    asm = assemble(grid)
    n = asm.n
    b = _selector(n, dict(inputs))
    l = _selector(n, dict(ports))
    return ThermalNetwork(asm.g, grid.heat_capacity().ravel(), b, l,
                          tuple(inputs.keys()), tuple(ports.keys()), t_ref)


def insert_thermal_vias(model: StackModel, positions, via: ViaGeometry,
                        module_id: str = "thermal_via") -> StackModel:
    """Add heat-removal via modules at (x, y) positions on every layer.

    Positions must be clear of existing modules; returns a new model.  An
    empty position list returns the model unchanged.
    """
    return place_thermal_vias(model, positions, module_id, via)
