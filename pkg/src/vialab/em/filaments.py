"""Volume-filament solver for frequency-dependent per-unit-length impedance.

Every labeled cell of a cross-section mask becomes a filament: a thin
sub-conductor with DC resistance 1/(sigma A) per meter and mutual inductance
(mu0/2pi) ln(R_ref/d) per meter against every other filament, where R_ref is
the radius of a coaxial reference return and the self term uses the
geometric-mean-distance of the square cell, d_ii = 0.44705 h.  Skin and
proximity effects emerge from the coupled solve

    (R + j omega M) I = P E,      P^T I = I_hat,

where P maps each filament to its conductor group, E collects one unknown
axial field (V/m) per group, and I_hat holds the prescribed group currents.
The dense matrix is factored once per frequency; the g right-hand sides and
the g x g Schur system then give E, the filament currents, per-group
impedances Z_g = E_g / I_g, and the dissipation-based composite resistance.

Reported inductances are relative to the coaxial return at R_ref; resistances
are independent of R_ref (changing it adds c * ones * ones^T to M, which
shifts only the imaginary part of Z).
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg

from ..errors import ConfigError, ResourceError, SolverError
from ..geometry import CrossSectionMask
from ..materials import Material

MU0 = 4e-7 * np.pi
SELF_GMD_SQUARE = 0.44705  # self-GMD of a square cell, in units of the side
DEFAULT_R_REF = 100e-6
DENSE_FILAMENT_CAP = 4000


@dataclass(frozen=True)
class FilamentSystem:
    """Per-unit-length filament discretization of one cross-section."""

    x: np.ndarray          # filament centers (m)
    y: np.ndarray
    area: np.ndarray       # m^2
    group: np.ndarray      # int
    resistance_per_length: np.ndarray   # Ohm/m, = 1/(sigma area)
    mutual_per_length: np.ndarray       # H/m, dense symmetric
    group_currents: dict   # group -> prescribed complex current (A)
    r_ref: float
    mask: CrossSectionMask | None = None

    @property
    def n_filaments(self) -> int:
        return self.x.size

    @property
    def n_groups(self) -> int:
        return int(self.group.max()) + 1

    def with_currents(self, group_currents: dict) -> "FilamentSystem":
        """Same geometry with a different prescribed-current pattern."""
        unknown = set(group_currents) - set(range(self.n_groups))
        if unknown:
            raise ConfigError(f"no such conductor group: {sorted(unknown)}")
        return replace(self, group_currents=dict(group_currents))


def discretize_filaments(mask: CrossSectionMask, materials,
                         r_ref: float = DEFAULT_R_REF,
                         dense_cap: int = DENSE_FILAMENT_CAP) -> FilamentSystem:
    """One filament per labeled mask cell.

    `materials` is a single Material for all groups or a dict group->Material.
    Insulating groups are rejected; the dense mutual matrix caps the filament
    count at `dense_cap` for predictable runtime.
    """
    ii, jj = np.nonzero(mask.labels >= 0)
    n = ii.size
    if n == 0:
        raise ConfigError("mask contains no labeled cells")
    if n > dense_cap:
        raise ResourceError(f"{n} filaments exceed the dense cap {dense_cap}; "
                            f"increase cell_size")
    h = mask.cell_size
    x = mask.x0 + h * ii.astype(float)
    y = mask.y0 + h * jj.astype(float)
    group = mask.labels[ii, jj].astype(int)
    area = np.full(n, h * h)

    sigma = np.empty(n)
    for g in range(int(group.max()) + 1):
        mat = materials[g] if isinstance(materials, dict) else materials
        if not isinstance(mat, Material):
            raise ConfigError(f"group {g}: expected a Material")
        if mat.electrical_conductivity <= 0:
            raise ConfigError(f"group {g}: material {mat.name!r} is not a conductor")
        sigma[group == g] = mat.electrical_conductivity
    resistance = 1.0 / (sigma * area)

    d = np.hypot(x[:, None] - x[None, :], y[:, None] - y[None, :])
    np.fill_diagonal(d, SELF_GMD_SQUARE * h)
    mutual = (MU0 / (2 * np.pi)) * np.log(r_ref / d)

    signs = mask.group_signs or {}
    currents = {0: complex(signs.get(0, 1))}
    return FilamentSystem(x, y, area, group, resistance, mutual, currents, r_ref, mask)


@dataclass(frozen=True)
class ImpedanceSample:
    """solve_impedance output at one frequency (all per unit length)."""

    frequency: float
    z_group: np.ndarray    # complex, NaN for groups with zero prescribed current
    z_matrix: np.ndarray   # (g, g) complex: E = Z I for arbitrary group currents
    l_group: np.ndarray    # H/m per group (finite at f=0 via the DC limit)
    r_eff: float           # dissipation-based composite resistance
    e_group: np.ndarray    # axial field per group (V/m)
    filament_currents: np.ndarray  # complex (n,)


@dataclass(frozen=True)
class CurrentDensityMap:
    """Filament current densities normalized to the DC solution."""

    frequency: float
    normalized: np.ndarray  # complex per filament; 0 where the DC density is 0
    x: np.ndarray
    y: np.ndarray
    group: np.ndarray
    cell_size: float


def _group_matrix(system: FilamentSystem) -> np.ndarray:
    g = system.n_groups
    p = np.zeros((system.n_filaments, g))
    p[np.arange(system.n_filaments), system.group] = 1.0
    return p


def _prescribed_vector(system: FilamentSystem) -> np.ndarray:
    i_hat = np.zeros(system.n_groups, dtype=complex)
    for grp, cur in system.group_currents.items():
        i_hat[grp] = cur
    return i_hat


def _dc_solution(system: FilamentSystem):
    """Closed-form DC solve: filament currents divide by conductance."""
    cond = 1.0 / system.resistance_per_length
    p = _group_matrix(system)
    g_tot = p.T @ cond                       # conductance per group
    i_hat = _prescribed_vector(system)
    e = i_hat / g_tot                        # axial field per group
    currents = cond * (p @ e)
    # first-order inductive term: Z(w) ~ diag(1/Gg) + jw L0, from expanding
    # (P^T (R + jwM)^-1 P)^-1 around w = 0
    w_cols = (cond[:, None] * p) / g_tot[None, :]
    l0 = w_cols.T @ system.mutual_per_length @ w_cols
    return e, currents, np.diag(1.0 / g_tot).astype(complex), l0


def solve_impedance(system: FilamentSystem, f: float):
    """Solve one frequency point; returns (ImpedanceSample, CurrentDensityMap)."""
    if f < 0:
        raise ConfigError("frequency must be >= 0")
    i_hat = _prescribed_vector(system)
    if not np.any(i_hat != 0):
        raise SolverError("all prescribed group currents are zero")

    e_dc, i_dc, zmat_dc, l0 = _dc_solution(system)
    if f == 0.0:
        e, currents, zmat = e_dc, i_dc, zmat_dc
        with np.errstate(invalid="ignore", divide="ignore"):
            l_group = np.where(i_hat != 0,
                               np.real((l0 @ i_hat) / np.where(i_hat == 0, 1, i_hat)),
                               np.nan)
    else:
        omega = 2 * np.pi * f
        z = (1j * omega) * system.mutual_per_length
        z[np.diag_indices_from(z)] += system.resistance_per_length
        p = _group_matrix(system).astype(complex)
        try:
            lu, piv = scipy.linalg.lu_factor(z)
        except scipy.linalg.LinAlgError as exc:
            raise SolverError(f"filament system singular at f={f:g} Hz") from exc
        x_cols = scipy.linalg.lu_solve((lu, piv), p)
        schur = p.T @ x_cols
        try:
            e = np.linalg.solve(schur, i_hat)
            zmat = np.linalg.inv(schur)
        except np.linalg.LinAlgError as exc:
            raise SolverError(f"group constraint system singular at f={f:g} Hz") from exc
        currents = x_cols @ e
        with np.errstate(invalid="ignore", divide="ignore"):
            l_group = np.where(i_hat != 0, np.imag(e / np.where(i_hat == 0, 1, i_hat)) / omega,
                               np.nan)

    with np.errstate(invalid="ignore", divide="ignore"):
        z_group = np.where(i_hat != 0, e / np.where(i_hat == 0, 1, i_hat), np.nan + 0j)
    i0 = i_hat[0]
    r_eff = float(np.sum(system.resistance_per_length * np.abs(currents) ** 2)
                  / abs(i0) ** 2) if i0 != 0 else float("nan")

    j_ac = currents / system.area
    j_dc = i_dc / system.area
    normalized = np.divide(j_ac, j_dc, out=np.zeros_like(j_ac), where=np.abs(j_dc) > 0)
    density = CurrentDensityMap(f, normalized, system.x, system.y, system.group,
                                float(np.sqrt(system.area[0])))
    sample = ImpedanceSample(f, z_group, zmat, l_group, r_eff, e, currents)
    return sample, density


@dataclass(frozen=True)
class ImpedanceTable:
    """Frequency table of per-group impedance (all per unit length)."""

    frequencies: np.ndarray   # (nf,) strictly increasing
    z_group: np.ndarray       # (nf, g) complex
    l_group: np.ndarray       # (nf, g) real
    z_matrix: np.ndarray      # (nf, g, g) complex
    r_eff: np.ndarray         # (nf,)

    @property
    def n_groups(self) -> int:
        return self.z_group.shape[1]

    def resistance(self, group: int = 0) -> np.ndarray:
        return np.real(self.z_group[:, group])

    def inductance(self, group: int = 0) -> np.ndarray:
        return self.l_group[:, group]

    def csv_rows(self):
        """Rows in the export layout frequency_hz,group,r_ohm_per_m,l_h_per_m."""
        for k, f in enumerate(self.frequencies):
            for g in range(self.n_groups):
                yield f, g, float(np.real(self.z_group[k, g])), float(self.l_group[k, g])


def default_frequency_grid() -> np.ndarray:
    """f = 0 plus 40 log-spaced points over 1 MHz .. 10 GHz."""
    return np.concatenate(([0.0], np.geomspace(1e6, 1e10, 40)))


def sweep_frequency(system: FilamentSystem, f_grid, threads: int = 1) -> ImpedanceTable:
    """Run solve_impedance over a sorted grid (>= 2 points).

    Points are independent; with threads > 1 they are evaluated by a thread
    pool and reassembled in input order, so results do not depend on the
    worker count.  Single-group sweeps are checked for the skin-effect
    monotonicity of R(f).
    """
    f_grid = np.asarray(list(f_grid), dtype=float)
    if f_grid.size < 2:
        raise ConfigError("frequency grid needs at least 2 points")
    if np.any(np.diff(f_grid) <= 0):
        raise ConfigError("frequency grid must be strictly increasing")

    def _one(idx):
        f = f_grid[idx]
        try:
            sample, _ = solve_impedance(system, f)
        except SolverError as exc:
            raise SolverError(f"sweep failed at f={f:g} Hz: {exc}") from exc
        return sample

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            samples = list(pool.map(_one, range(f_grid.size)))
    else:
        samples = [_one(i) for i in range(f_grid.size)]

    z_group = np.array([s.z_group for s in samples])
    l_group = np.array([s.l_group for s in samples])
    zmat = np.array([s.z_matrix for s in samples])
    r_eff = np.array([s.r_eff for s in samples])

    if system.n_groups == 1:
        r = np.real(z_group[:, 0])
        drops = np.diff(r) < -1e-9 * np.maximum(r[:-1], 1e-300)
        if np.any(drops):
            k = int(np.argmax(drops))
            raise SolverError(f"skin-effect monotonicity violated between "
                              f"f={f_grid[k]:g} and f={f_grid[k + 1]:g} Hz")
    return ImpedanceTable(f_grid, z_group, l_group, zmat, r_eff)
