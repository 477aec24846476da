"""Modified nodal analysis: DC, AC sweep, and trapezoidal transient.

Unknown vector = node voltages (ground dropped) followed by branch
currents of voltage sources and inductors.  Every solve is followed by a
constitutive KCL check: element currents recomputed from the solved
voltages must cancel at every node to 1e-9 of the source scale.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
import scipy.linalg

from ..errors import CapabilityError, ConfigError, SolverError
from .netlist import (
    GROUND,
    Capacitor,
    EthermResistor,
    FreqDepResistor,
    Inductor,
    ISource,
    Netlist,
    ReducedBlock,
    Resistor,
    TLine,
    VCCS,
    VSource,
)

KCL_RTOL = 1e-9


@dataclass(frozen=True)
class AnalysisResult:
    """Solved node voltages (and branch currents) for one analysis.

    voltages: (n,) for dc, (nf, n) complex for ac, (nt, n) for transient.
    """

    kind: str                          # "dc" | "ac" | "transient" | "transfer"
    node_index: dict
    voltages: np.ndarray = None
    branch_currents: dict = field(default_factory=dict)
    frequencies: np.ndarray = None
    times: np.ndarray = None
    h: np.ndarray = None               # transfer-function values
    kcl_residual: float = 0.0

    def voltage(self, node: str):
        """Voltage at a node (scalar for dc, array over the sweep axis)."""
        if node == GROUND:
            v = self.voltages[..., :1] * 0.0
            return v[..., 0] if self.voltages.ndim > 1 else 0.0
        if node not in self.node_index:
            raise KeyError(f"unknown node {node!r}")
        return self.voltages[..., self.node_index[node]]

    def current(self, name: str):
        """Branch current of a voltage source or inductor."""
        if name not in self.branch_currents:
            raise KeyError(f"no branch current recorded for {name!r}")
        return self.branch_currents[name]


def _node_map(netlist: Netlist) -> dict:
    return {name: k for k, name in enumerate(netlist.nodes)}


def _branch_elements(netlist: Netlist) -> list:
    return [el for el in netlist.elements if isinstance(el, (VSource, Inductor))]


def _check_connectivity(netlist: Netlist, conduct_c: bool) -> None:
    """Every node must reach ground through a conductive path."""
    parent: dict = {GROUND: GROUND}

    def find(a):
        parent.setdefault(a, a)
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def union(a, b):
        parent[find(a)] = find(b)

    for el in netlist.elements:
        if isinstance(el, (Resistor, FreqDepResistor, EthermResistor,
                           Inductor, VSource)):
            union(el.n1, el.n2)
        elif isinstance(el, Capacitor) and conduct_c:
            union(el.n1, el.n2)
        elif isinstance(el, TLine):
            union(el.n1, GROUND)
            union(el.n2, GROUND)
        elif isinstance(el, ReducedBlock):
            for p in el.ports:
                union(p, GROUND)
    ground = find(GROUND)
    for node in netlist.nodes:
        if find(node) != ground:
            raise SolverError(
                f"floating node {node!r} has no conductive path to ground")


def _resistive_value(el, f: float, element_temps) -> float:
    if isinstance(el, Resistor):
        return el.ohms
    if isinstance(el, FreqDepResistor):
        return el.value_at(f)
    # EthermResistor: at the bound temperature, defaulting to its own T0.
    t = (element_temps or {}).get(el.name, el.t0)
    return el.resistance_at(t)


def _assemble(netlist: Netlist, f: float, element_temps=None,
              complex_valued: bool = True):
    """Stamp the frequency-domain MNA system at frequency f (0 = DC)."""
    nodes = _node_map(netlist)
    branches = {el.name: len(nodes) + k
                for k, el in enumerate(_branch_elements(netlist))}
    dim = len(nodes) + len(branches)
    dtype = complex if complex_valued else float
    a = np.zeros((dim, dim), dtype=dtype)
    z = np.zeros(dim, dtype=dtype)
    w = 2 * np.pi * f

    def n(idx):     # node column, or None for ground
        return None if idx == GROUND else nodes[idx]

    def add(i, j, val):
        if i is not None and j is not None:
            a[i, j] += val

    def stamp_admittance(n1, n2, y):
        add(n(n1), n(n1), y)
        add(n(n2), n(n2), y)
        add(n(n1), n(n2), -y)
        add(n(n2), n(n1), -y)

    for el in netlist.elements:
        if isinstance(el, (Resistor, FreqDepResistor, EthermResistor)):
            stamp_admittance(el.n1, el.n2, 1.0 / _resistive_value(el, f, element_temps))
        elif isinstance(el, Capacitor):
            if f != 0.0:
                stamp_admittance(el.n1, el.n2, 1j * w * el.farads)
        elif isinstance(el, Inductor):
            ib = branches[el.name]
            add(n(el.n1), ib, 1.0)
            add(ib, n(el.n1), 1.0)
            add(n(el.n2), ib, -1.0)
            add(ib, n(el.n2), -1.0)
            a[ib, ib] -= 1j * w * el.henries if f != 0.0 else 0.0
        elif isinstance(el, VSource):
            ib = branches[el.name]
            add(n(el.n1), ib, 1.0)
            add(ib, n(el.n1), 1.0)
            add(n(el.n2), ib, -1.0)
            add(ib, n(el.n2), -1.0)
            z[ib] = el.dc if f == 0.0 else el.ac_magnitude
        elif isinstance(el, ISource):
            val = el.dc if f == 0.0 else el.ac_magnitude
            if n(el.n1) is not None:
                z[n(el.n1)] -= val
            if n(el.n2) is not None:
                z[n(el.n2)] += val
        elif isinstance(el, VCCS):
            add(n(el.n1), n(el.nc1), el.gm)
            add(n(el.n1), n(el.nc2), -el.gm)
            add(n(el.n2), n(el.nc1), -el.gm)
            add(n(el.n2), n(el.nc2), el.gm)
        elif isinstance(el, TLine):
            y = _tline_y(el, f)
            ports = (el.n1, el.n2)
            for i in range(2):
                for j in range(2):
                    add(n(ports[i]), n(ports[j]), y[i, j])
        elif isinstance(el, ReducedBlock):
            y = el.admittance(1j * w if f != 0.0 else 0.0)
            for i, pi in enumerate(el.ports):
                for j, pj in enumerate(el.ports):
                    add(n(pi), n(pj), y[i, j])
        else:
            raise ConfigError(f"cannot stamp element {el.name}")
    return a, z, nodes, branches


def _tline_y(el: TLine, f: float) -> np.ndarray:
    """2-port admittance of the line; degenerate short as a large stamp."""
    w = 2 * np.pi * f
    zs = el.rpul + 1j * w * el.lpul
    yp = el.gpul + 1j * w * el.cpul
    gl = np.sqrt(zs * yp) * el.length
    if abs(gl) < 1e-12:
        z_series = zs * el.length
        if abs(z_series) < 1e-15:
            y = 1e12                       # electrically ideal short
        else:
            y = 1.0 / z_series
        return np.array([[y, -y], [-y, y]], complex)
    z0 = np.sqrt(zs / yp)
    sh = np.sinh(gl)
    if sh == 0:
        raise SolverError(f"{el.name}: line resonance (sinh gamma*l = 0) "
                          f"at f = {f:g} Hz")
    coth = np.cosh(gl) / sh
    return np.array([[coth, -1.0 / sh], [-1.0 / sh, coth]]) / z0


def _source_scale(netlist: Netlist, ac: bool) -> float:
    mags = [abs(el.ac_magnitude if ac else el.dc)
            for el in netlist.of_type(VSource, ISource)]
    return max(mags) if mags else 0.0


def _solve_system(a, z, netlist: Netlist):
    try:
        x = np.linalg.solve(a, z)
    except np.linalg.LinAlgError:
        raise SolverError("singular MNA matrix (check for floating subcircuits)")
    if not np.all(np.isfinite(x)):
        raise SolverError("MNA solution is not finite")
    return x


def _kcl_residual(netlist: Netlist, nodes, branches, x, f: float,
                  element_temps=None) -> float:
    """Max nodal imbalance of constitutively recomputed element currents."""
    resid = np.zeros(len(nodes), dtype=complex)
    w = 2 * np.pi * f

    def v(node):
        return 0.0 if node == GROUND else x[nodes[node]]

    def leave(node, i):
        if node != GROUND:
            resid[nodes[node]] += i

    for el in netlist.elements:
        if isinstance(el, (Resistor, FreqDepResistor, EthermResistor)):
            i = (v(el.n1) - v(el.n2)) / _resistive_value(el, f, element_temps)
            leave(el.n1, i)
            leave(el.n2, -i)
        elif isinstance(el, Capacitor):
            if f != 0.0:
                i = 1j * w * el.farads * (v(el.n1) - v(el.n2))
                leave(el.n1, i)
                leave(el.n2, -i)
        elif isinstance(el, (Inductor, VSource)):
            i = x[branches[el.name]]
            leave(el.n1, i)
            leave(el.n2, -i)
        elif isinstance(el, ISource):
            val = el.dc if f == 0.0 else el.ac_magnitude
            leave(el.n1, val)
            leave(el.n2, -val)
        elif isinstance(el, VCCS):
            i = el.gm * (v(el.nc1) - v(el.nc2))
            leave(el.n1, i)
            leave(el.n2, -i)
        elif isinstance(el, TLine):
            y = _tline_y(el, f)
            vp = np.array([v(el.n1), v(el.n2)])
            ip = y @ vp
            leave(el.n1, ip[0])
            leave(el.n2, ip[1])
        elif isinstance(el, ReducedBlock):
            y = el.admittance(1j * w if f != 0.0 else 0.0)
            vp = np.array([v(p) for p in el.ports])
            ip = y @ vp
            for p, i in zip(el.ports, ip):
                leave(p, i)
    return float(np.abs(resid).max()) if resid.size else 0.0


def _check_kcl(netlist, nodes, branches, x, f, element_temps, ac: bool):
    resid = _kcl_residual(netlist, nodes, branches, x, f, element_temps)
    scale = _source_scale(netlist, ac)
    limit = KCL_RTOL * scale if scale > 0 else 1e-12
    if resid > limit:
        raise SolverError(
            f"KCL residual {resid:.3e} A exceeds {limit:.3e} A "
            f"(source scale {scale:g})")
    return resid


def dc_solve(netlist: Netlist,
             element_temps: Mapping[str, float] | None = None) -> AnalysisResult:
    """Operating point: capacitors open, inductors short, tables at f=0."""
    _check_connectivity(netlist, conduct_c=False)
    a, z, nodes, branches = _assemble(netlist, 0.0, element_temps,
                                      complex_valued=False)
    x = _solve_system(a, z, netlist)
    resid = _check_kcl(netlist, nodes, branches, x, 0.0, element_temps, ac=False)
    currents = {name: float(x[ib]) for name, ib in branches.items()}
    return AnalysisResult("dc", dict(nodes), x[:len(nodes)].copy(),
                          currents, kcl_residual=resid)


def ac_sweep(netlist: Netlist, f_grid, threads: int = 1,
             element_temps: Mapping[str, float] | None = None) -> AnalysisResult:
    """Complex MNA per frequency; result frequencies echo the grid exactly."""
    f_grid = np.asarray(list(f_grid), dtype=float)
    if f_grid.size == 0:
        raise ConfigError("empty frequency grid")
    if np.any(np.diff(f_grid) <= 0):
        raise ConfigError("frequency grid must be sorted strictly ascending")
    if np.any(f_grid < 0):
        raise ConfigError("negative frequency in grid")
    # Table coverage is validated up front so failures name the element.
    for el in netlist.of_type(FreqDepResistor):
        for f in (f_grid[0], f_grid[-1]):
            el.value_at(f)
    _check_connectivity(netlist, conduct_c=bool(np.all(f_grid > 0)))

    nodes = _node_map(netlist)
    branch_names = [el.name for el in _branch_elements(netlist)]

    def solve_one(f: float):
        a, z, nds, brs = _assemble(netlist, f, element_temps)
        x = _solve_system(a, z, netlist)
        resid = _check_kcl(netlist, nds, brs, x, f, element_temps, ac=True)
        return x, resid

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(solve_one, f_grid))
    else:
        results = [solve_one(f) for f in f_grid]

    dim = len(nodes) + len(branch_names)
    xs = np.array([r[0] for r in results]).reshape(f_grid.size, dim)
    currents = {name: xs[:, len(nodes) + k].copy()
                for k, name in enumerate(branch_names)}
    return AnalysisResult("ac", dict(nodes), xs[:, :len(nodes)].copy(),
                          currents, frequencies=f_grid.copy(),
                          kcl_residual=max(r[1] for r in results))


def _transient_reject(netlist: Netlist) -> None:
    for el in netlist.elements:
        if isinstance(el, (FreqDepResistor, TLine, ReducedBlock)):
            raise CapabilityError(
                f"{el.name}: {type(el).__name__} elements are frequency-domain "
                "only and not supported in transient analysis")


def _initial_state(netlist: Netlist, element_temps):
    """Consistent t=0 solve: capacitors as ic-valued sources, inductors as
    ic current sources.  Returns node voltages, V-source currents, and the
    t=0 capacitor currents (inrush) used to seed the trapezoidal state."""
    nodes = _node_map(netlist)
    caps = netlist.of_type(Capacitor)
    vsrc_and_l = _branch_elements(netlist)
    branch_owners = vsrc_and_l + list(caps)
    branches = {el.name: len(nodes) + k for k, el in enumerate(branch_owners)}
    dim = len(nodes) + len(branches)
    a = np.zeros((dim, dim))
    z = np.zeros(dim)

    def n(idx):
        return None if idx == GROUND else nodes[idx]

    def add(i, j, val):
        if i is not None and j is not None:
            a[i, j] += val

    for el in netlist.elements:
        if isinstance(el, (Resistor, EthermResistor)):
            y = 1.0 / _resistive_value(el, 0.0, element_temps)
            add(n(el.n1), n(el.n1), y)
            add(n(el.n2), n(el.n2), y)
            add(n(el.n1), n(el.n2), -y)
            add(n(el.n2), n(el.n1), -y)
        elif isinstance(el, (Capacitor, VSource)):
            ib = branches[el.name]
            add(n(el.n1), ib, 1.0)
            add(ib, n(el.n1), 1.0)
            add(n(el.n2), ib, -1.0)
            add(ib, n(el.n2), -1.0)
            z[ib] = el.ic if isinstance(el, Capacitor) else el.dc
        elif isinstance(el, Inductor):
            ib = branches[el.name]
            # Known current ic; keep the branch row as a trivial equation.
            a[ib, ib] = 1.0
            z[ib] = el.ic
            if n(el.n1) is not None:
                z[n(el.n1)] -= el.ic
            if n(el.n2) is not None:
                z[n(el.n2)] += el.ic
        elif isinstance(el, ISource):
            if n(el.n1) is not None:
                z[n(el.n1)] -= el.dc
            if n(el.n2) is not None:
                z[n(el.n2)] += el.dc
        elif isinstance(el, VCCS):
            add(n(el.n1), n(el.nc1), el.gm)
            add(n(el.n1), n(el.nc2), -el.gm)
            add(n(el.n2), n(el.nc1), -el.gm)
            add(n(el.n2), n(el.nc2), el.gm)
    x = _solve_system(a, z, netlist)
    v0 = x[:len(nodes)]
    i_v0 = {el.name: x[branches[el.name]] for el in vsrc_and_l}
    i_c0 = {el.name: x[branches[el.name]] for el in caps}
    return v0, i_v0, i_c0


def transient_solve(netlist: Netlist, dt: float, t_end: float,
                    element_temps: Mapping[str, float] | None = None
                    ) -> AnalysisResult:
    """Fixed-step trapezoidal integration from capacitor/inductor ics.

    Initial conditions come from element ic= values (default 0); the t=0
    row is a consistent solve with those values enforced.
    """
    if dt <= 0 or t_end <= 0:
        raise ConfigError("dt and t_end must be > 0")
    _transient_reject(netlist)
    _check_connectivity(netlist, conduct_c=True)

    nodes = _node_map(netlist)
    branch_els = _branch_elements(netlist)
    branches = {el.name: len(nodes) + k for k, el in enumerate(branch_els)}
    dim = len(nodes) + len(branches)
    caps = netlist.of_type(Capacitor)
    inds = netlist.of_type(Inductor)

    a = np.zeros((dim, dim))
    z_src = np.zeros(dim)

    def n(idx):
        return None if idx == GROUND else nodes[idx]

    def add(i, j, val):
        if i is not None and j is not None:
            a[i, j] += val

    for el in netlist.elements:
        if isinstance(el, (Resistor, EthermResistor)):
            y = 1.0 / _resistive_value(el, 0.0, element_temps)
            add(n(el.n1), n(el.n1), y)
            add(n(el.n2), n(el.n2), y)
            add(n(el.n1), n(el.n2), -y)
            add(n(el.n2), n(el.n1), -y)
        elif isinstance(el, Capacitor):
            g_eq = 2.0 * el.farads / dt
            add(n(el.n1), n(el.n1), g_eq)
            add(n(el.n2), n(el.n2), g_eq)
            add(n(el.n1), n(el.n2), -g_eq)
            add(n(el.n2), n(el.n1), -g_eq)
        elif isinstance(el, Inductor):
            ib = branches[el.name]
            add(n(el.n1), ib, 1.0)
            add(ib, n(el.n1), 1.0)
            add(n(el.n2), ib, -1.0)
            add(ib, n(el.n2), -1.0)
            a[ib, ib] -= 2.0 * el.henries / dt
        elif isinstance(el, VSource):
            ib = branches[el.name]
            add(n(el.n1), ib, 1.0)
            add(ib, n(el.n1), 1.0)
            add(n(el.n2), ib, -1.0)
            add(ib, n(el.n2), -1.0)
            z_src[ib] = el.dc
        elif isinstance(el, ISource):
            if n(el.n1) is not None:
                z_src[n(el.n1)] -= el.dc
            if n(el.n2) is not None:
                z_src[n(el.n2)] += el.dc
        elif isinstance(el, VCCS):
            add(n(el.n1), n(el.nc1), el.gm)
            add(n(el.n1), n(el.nc2), -el.gm)
            add(n(el.n2), n(el.nc1), -el.gm)
            add(n(el.n2), n(el.nc2), el.gm)

    lu = scipy.linalg.lu_factor(a)

    v0, i_v0, i_c0 = _initial_state(netlist, element_temps)
    steps = int(round(t_end / dt))
    if steps < 1:
        raise ConfigError("t_end shorter than one step")
    times = np.arange(steps + 1) * dt
    volts = np.empty((steps + 1, len(nodes)))
    volts[0] = v0
    ibr = np.empty((steps + 1, len(branches)))
    for el in branch_els:
        ibr[0, branches[el.name] - len(nodes)] = (
            el.ic if isinstance(el, Inductor) else i_v0[el.name])

    def vd(vec, el):
        va = 0.0 if el.n1 == GROUND else vec[nodes[el.n1]]
        vb = 0.0 if el.n2 == GROUND else vec[nodes[el.n2]]
        return va - vb

    cap_state = {el.name: (vd(v0, el), i_c0[el.name]) for el in caps}
    x = np.concatenate([v0, ibr[0]])
    for s in range(1, steps + 1):
        z = z_src.copy()
        for el in caps:
            v_n, i_n = cap_state[el.name]
            g_eq = 2.0 * el.farads / dt
            inj = g_eq * v_n + i_n
            if n(el.n1) is not None:
                z[n(el.n1)] += inj
            if n(el.n2) is not None:
                z[n(el.n2)] -= inj
        for el in inds:
            ib = branches[el.name]
            z[ib] = -(vd(x, el) + 2.0 * el.henries / dt * x[ib])
        x = scipy.linalg.lu_solve(lu, z)
        if not np.all(np.isfinite(x)):
            raise SolverError(f"transient diverged at t = {s * dt:g} s")
        volts[s] = x[:len(nodes)]
        for el in caps:
            v_n, i_n = cap_state[el.name]
            g_eq = 2.0 * el.farads / dt
            v_new = vd(x, el)
            cap_state[el.name] = (v_new, g_eq * (v_new - v_n) - i_n)
        ibr[s] = x[len(nodes):]

    # Matrix-consistency check of the final step (companion-form KCL).
    resid = float(np.abs(a @ x - z).max())
    scale = max(_source_scale(netlist, ac=False), 1.0)
    if resid > KCL_RTOL * scale:
        raise SolverError(f"transient residual {resid:.3e} exceeds tolerance")

    currents = {name: ibr[:, ib - len(nodes)].copy()
                for name, ib in branches.items()}
    return AnalysisResult("transient", dict(nodes), volts, currents,
                          times=times, kcl_residual=resid)
