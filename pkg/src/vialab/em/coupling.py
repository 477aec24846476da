"""Distance sweep of the coupling parasitics between a pair of vias.

For each centre-to-centre distance x the four per-unit-length coupling
parameters are extracted:

* ``C_k`` — mutual capacitance from a two-conductor electrostatic solve,
* ``G_k`` — substrate leakage, proportional to C_k through sigma/epsilon,
* ``L_k`` — mutual inductance, from the off-diagonal of a two-group
  filament impedance matrix,
* ``R_k`` — proximity-induced resistance increase of one via caused by
  eddy currents in its (zero-net-current) neighbour.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, GeometryError
from ..geometry import Circle, CrossSection, Placed, build_cross_section
from ..materials import Material
from .electrostatic import EPS0, pair_capacitance
from .filaments import discretize_filaments, solve_impedance

DEFAULT_COUPLING_FREQUENCY = 1e9


@dataclass(frozen=True)
class CouplingTable:
    """Per-unit-length coupling parameters versus via separation."""

    distances: np.ndarray     # (n,) centre-to-centre, m
    rk: np.ndarray            # (n,) ohm/m proximity resistance increase
    lk: np.ndarray            # (n,) H/m mutual inductance
    ck: np.ndarray            # (n,) F/m mutual capacitance
    gk: np.ndarray            # (n,) S/m substrate conductance
    frequency: float          # Hz at which R_k and L_k were evaluated

    def csv_rows(self):
        """Rows in the export layout distance_m,rk_...,lk_...,ck_...,gk_..."""
        for k in range(self.distances.size):
            yield (float(self.distances[k]), float(self.rk[k]),
                   float(self.lk[k]), float(self.ck[k]), float(self.gk[k]))

    def model_at(self, index: int, length: float = 1.0) -> "CouplingModel":
        """Lumped element values for one separation over a via length (m)."""
        if not 0 <= index < self.distances.size:
            raise ConfigError(f"no coupling entry {index} (table has "
                              f"{self.distances.size})")
        if length <= 0:
            raise ConfigError("coupling model length must be > 0")
        return CouplingModel(
            rk_ohm=float(self.rk[index]) * length,
            lk_h=float(self.lk[index]) * length,
            ck_f=float(self.ck[index]) * length,
            gk_s=float(self.gk[index]) * length,
            distance=float(self.distances[index]),
            length=length,
        )


@dataclass(frozen=True)
class CouplingModel:
    """Lumped circuit values coupling two adjacent vias.

    The series R-L branch carries the magnetically induced drop and the eddy
    loss; the parallel C and G carry the dielectric and substrate paths.  All
    values are totals for ``length`` metres of via, scaled from the
    per-unit-length table entry at separation ``distance``.
    """

    rk_ohm: float
    lk_h: float
    ck_f: float
    gk_s: float
    distance: float
    length: float


def _pair_system(radius: float, distance: float, conductor: Material,
                 cell_size: float):
    section = CrossSection.composite([
        Placed(Circle(-0.5 * distance, 0.0, radius), group_id=0),
        Placed(Circle(+0.5 * distance, 0.0, radius), group_id=1),
    ])
    mask = build_cross_section(section, cell_size)
    return discretize_filaments(mask, {0: conductor, 1: conductor})


def coupling_sweep(radius: float, distances, substrate: Material,
                   conductor: Material, frequency: float = DEFAULT_COUPLING_FREQUENCY,
                   cell_size: float | None = None, nodes: int | None = None) -> CouplingTable:
    """Extract R_k, L_k, C_k, G_k for each via separation in ``distances``.

    ``distances`` must be sorted ascending and all larger than the via
    diameter (separated conductors).  R_k and L_k come from a two-group
    filament solve at ``frequency``; C_k from an electrostatic solve in the
    substrate dielectric; G_k = (sigma_sub/eps_sub) * C_k.
    """
    dist = np.asarray(list(distances), dtype=float)
    if dist.size == 0:
        raise ConfigError("coupling sweep needs at least one distance")
    if np.any(np.diff(dist) <= 0):
        raise ConfigError("distances must be sorted strictly ascending")
    if dist[0] <= 2 * radius:
        raise GeometryError(
            f"distance {dist[0]:g} m does not separate vias of radius {radius:g} m")
    if frequency <= 0:
        raise ConfigError("coupling reference frequency must be > 0")
    if cell_size is None:
        cell_size = radius / 10.0

    er = substrate.relative_permittivity
    sigma_over_eps = substrate.electrical_conductivity / (EPS0 * er)

    # Isolated-via reference resistance for the proximity term.
    iso = discretize_filaments(
        build_cross_section(CrossSection.circle(radius), cell_size),
        {0: conductor})
    sample_iso, _ = solve_impedance(iso, frequency)
    r_iso = float(np.real(sample_iso.z_group[0]))

    omega = 2 * np.pi * frequency
    rk = np.empty_like(dist)
    lk = np.empty_like(dist)
    ck = np.empty_like(dist)
    gk = np.empty_like(dist)
    for k, x in enumerate(dist):
        pair = _pair_system(radius, x, conductor, cell_size)
        # Aggressor carries 1 A, victim constrained to zero net current;
        # Zmat[1,0] is then the open-circuit transfer impedance.
        pair = pair.with_currents({0: 1.0, 1: 0.0})
        sample, _ = solve_impedance(pair, frequency)
        rk[k] = max(float(np.real(sample.z_matrix[0, 0])) - r_iso, 0.0)
        lk[k] = float(np.imag(sample.z_matrix[1, 0])) / omega
        kwargs = {} if nodes is None else {"nodes": nodes}
        ck[k] = pair_capacitance(radius, x, er, **kwargs)
        gk[k] = sigma_over_eps * ck[k]
    return CouplingTable(dist, rk, lk, ck, gk, frequency)
