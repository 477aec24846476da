"""Finite-volume heat-conduction solves on voxel grids.

The conductance between adjacent voxels is the series combination of two
half-voxel slabs, g = A / (d1/(2 k1) + d2/(2 k2)); boundary faces add the
corresponding half-slab (plus film, if convective) conductance to ground.
The assembled system is symmetric positive definite once at least one
face is non-adiabatic.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np
import scipy.sparse
import scipy.sparse.linalg

from ..errors import ConfigError, SolverError
from .grid import Adiabatic, Convective, FixedTemperature, PowerMap, VoxelGrid

DIRECT_SOLVE_LIMIT = 50_000
STEADY_RTOL = 1e-9
ENERGY_BALANCE_RTOL = 1e-6


@dataclass(frozen=True)
class ThermalAssembly:
    """Conductance system G T = b_base + P with boundary bookkeeping."""

    g: scipy.sparse.csr_matrix     # (n, n) W/K
    b_base: np.ndarray             # (n,) W, boundary-temperature loads g_b*T_b
    boundary_g: np.ndarray         # (n,) W/K total boundary conductance per node
    has_reference: bool

    @property
    def n(self) -> int:
        return self.b_base.size


def _face_axes(grid: VoxelGrid):
    px, py, pz = grid.pitch
    return {
        "x": (px, py * pz),
        "y": (py, px * pz),
        "z": (pz, px * py),
    }


def assemble(grid: VoxelGrid) -> ThermalAssembly:
    """Assemble the finite-volume conductance matrix and boundary loads."""
    kk = grid.conductivity()
    n = grid.n_voxels
    nz, ny, nx = kk.shape
    idx = np.arange(n, dtype=np.intp).reshape(nz, ny, nx)
    axes = _face_axes(grid)

    rows, cols, vals = [], [], []
    diag = np.zeros(n)

    def add_internal(a_idx, b_idx, k1, k2, d, area):
        g = (2.0 * area / d) * (k1 * k2) / (k1 + k2)
        a, b, g = a_idx.ravel(), b_idx.ravel(), g.ravel()
        rows.append(a); cols.append(b); vals.append(-g)
        rows.append(b); cols.append(a); vals.append(-g)
        np.add.at(diag, a, g)
        np.add.at(diag, b, g)

    d, area = axes["x"]
    if nx > 1:
        add_internal(idx[:, :, :-1], idx[:, :, 1:], kk[:, :, :-1], kk[:, :, 1:], d, area)
    d, area = axes["y"]
    if ny > 1:
        add_internal(idx[:, :-1, :], idx[:, 1:, :], kk[:, :-1, :], kk[:, 1:, :], d, area)
    d, area = axes["z"]
    if nz > 1:
        add_internal(idx[:-1, :, :], idx[1:, :, :], kk[:-1, :, :], kk[1:, :, :], d, area)

    boundary_g = np.zeros(n)
    boundary_gt = np.zeros(n)
    face_slabs = {
        "x-": (idx[:, :, 0], kk[:, :, 0], "x"),
        "x+": (idx[:, :, -1], kk[:, :, -1], "x"),
        "y-": (idx[:, 0, :], kk[:, 0, :], "y"),
        "y+": (idx[:, -1, :], kk[:, -1, :], "y"),
        "z-": (idx[0, :, :], kk[0, :, :], "z"),
        "z+": (idx[-1, :, :], kk[-1, :, :], "z"),
    }
    has_reference = False
    for face, (f_idx, f_k, ax) in face_slabs.items():
        bc = grid.boundaries[face]
        if isinstance(bc, Adiabatic):
            continue
        d, area = axes[ax]
        if isinstance(bc, FixedTemperature):
            g = area / (d / (2.0 * f_k))
            t_b = bc.temperature
        elif isinstance(bc, Convective):
            g = area / (d / (2.0 * f_k) + 1.0 / bc.film_coefficient)
            t_b = bc.ambient
        else:
            raise ConfigError(f"unknown boundary condition on face {face}")
        has_reference = True
        f = f_idx.ravel()
        g = np.broadcast_to(g, f_idx.shape).ravel()
        np.add.at(diag, f, g)
        np.add.at(boundary_g, f, g)
        np.add.at(boundary_gt, f, g * t_b)

    rows.append(np.arange(n, dtype=np.intp))
    cols.append(np.arange(n, dtype=np.intp))
    vals.append(diag)
    g_mat = scipy.sparse.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n))
    g_mat.sum_duplicates()
    return ThermalAssembly(g_mat, boundary_gt, boundary_g, has_reference)


def _solve_spd(g: scipy.sparse.csr_matrix, b: np.ndarray,
               rtol: float = STEADY_RTOL) -> np.ndarray:
    n = b.size
    if n <= DIRECT_SOLVE_LIMIT:
        x = scipy.sparse.linalg.spsolve(g.tocsc(), b)
    else:
        from ..amg import smoothed_aggregation_preconditioner

        m = smoothed_aggregation_preconditioner(g)
        x, info = scipy.sparse.linalg.cg(g, b, rtol=rtol / 10, atol=0.0,
                                         maxiter=2000, M=m)
        if info != 0:
            raise SolverError(f"thermal CG failed to converge (info={info})")
    resid = np.linalg.norm(g @ x - b)
    if resid > rtol * max(np.linalg.norm(b), 1e-300):
        raise SolverError(
            f"thermal solve residual {resid:.3e} exceeds {rtol:g} relative")
    return x


@dataclass(frozen=True)
class ThermalSolution:
    """Steady temperature field with hotspot and energy bookkeeping."""

    temperature: np.ndarray        # (nz, ny, nx) K
    t_max: float
    hotspot: tuple                 # (i, j, k) voxel index, x/y/z order
    hotspot_linear: int
    energy_residual: float         # relative steady energy-balance error
    port_temperatures: dict


def _port_temps(field_flat: np.ndarray, ports) -> dict:
    out = {}
    for name, vox in (ports or {}).items():
        vox = np.asarray(vox, dtype=np.intp)
        out[name] = float(field_flat[vox].mean())
    return out


def solve_steady(grid: VoxelGrid, power: PowerMap,
                 ports: Mapping[str, np.ndarray] | None = None) -> ThermalSolution:
    """Solve G T = P + boundary loads; checks the global energy balance.

    The hotspot is the maximum-temperature voxel, ties broken by lowest
    linear index (z-major, then y, then x).
    """
    asm = assemble(grid)
    if not asm.has_reference:
        raise ConfigError("all faces adiabatic: steady problem is ill-posed")
    p = power.steady_vector(asm.n)
    t = _solve_spd(asm.g, asm.b_base + p)

    injected = float(p.sum())
    outflow = float(np.sum(asm.boundary_g * t) - asm.b_base.sum())
    scale = max(abs(injected), abs(outflow), 1e-30)
    residual = abs(injected - outflow) / scale if injected != 0 or outflow != 0 else 0.0
    if injected > 0 and residual > ENERGY_BALANCE_RTOL:
        raise SolverError(
            f"steady energy balance violated: injected {injected:.6e} W, "
            f"boundary outflow {outflow:.6e} W ({residual:.2e} relative)")

    flat = t
    hot_lin = int(np.argmax(flat))
    k, rem = divmod(hot_lin, grid.ny * grid.nx)
    j, i = divmod(rem, grid.nx)
    return ThermalSolution(
        temperature=t.reshape(grid.nz, grid.ny, grid.nx),
        t_max=float(flat[hot_lin]),
        hotspot=(i, j, k),
        hotspot_linear=hot_lin,
        energy_residual=residual,
        port_temperatures=_port_temps(flat, ports),
    )


@dataclass(frozen=True)
class TransientResult:
    """Backward-Euler temperature traces at declared ports."""

    times: np.ndarray              # (nt,) s
    traces: dict                   # name -> (nt,) K
    final: np.ndarray              # (nz, ny, nx) K field at t_end


def solve_transient(grid: VoxelGrid, power: PowerMap, dt: float, t_end: float,
                    ports: Mapping[str, np.ndarray] | None = None,
                    initial=None) -> TransientResult:
    """Implicit (backward-Euler) transient run from a given initial field.

    ``initial`` may be a scalar, a full field, or None, which starts from
    the zero-power steady state (every boundary at its own temperature).
    One sparse factorization of (C/dt + G) is reused for all steps.
    """
    if dt <= 0 or t_end <= 0:
        raise ConfigError("dt and t_end must be > 0")
    asm = assemble(grid)
    n = asm.n
    cap = grid.heat_capacity().ravel()
    if np.any(cap <= 0):
        raise ConfigError("zero heat capacity on an interior node")
    power.validate(n)

    if initial is None:
        if not asm.has_reference:
            raise ConfigError("all faces adiabatic: supply an initial field")
        t = _solve_spd(asm.g, asm.b_base)
    elif np.isscalar(initial):
        t = np.full(n, float(initial))
    else:
        t = np.asarray(initial, dtype=float).ravel().copy()
        if t.size != n:
            raise ConfigError("initial field size does not match grid")

    steps = int(round(t_end / dt))
    if steps < 1:
        raise ConfigError("t_end shorter than one step")
    a = (scipy.sparse.diags(cap / dt) + asm.g).tocsc()
    lu = scipy.sparse.linalg.splu(a)

    times = np.empty(steps + 1)
    times[0] = 0.0
    port_items = list((ports or {}).items())
    traces = {name: np.empty(steps + 1) for name, _ in port_items}
    for name, vox in port_items:
        traces[name][0] = float(t[np.asarray(vox, dtype=np.intp)].mean())
    for s in range(1, steps + 1):
        tau = s * dt
        rhs = cap / dt * t + asm.b_base + power.vector_at(tau, n)
        t = lu.solve(rhs)
        times[s] = tau
        for name, vox in port_items:
            traces[name][s] = float(t[np.asarray(vox, dtype=np.intp)].mean())
    return TransientResult(times, traces, t.reshape(grid.nz, grid.ny, grid.nx))
