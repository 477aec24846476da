"""Exporters: CSV tables, SPICE-like subcircuits, and their re-importer.

CSV files use a comma separator, a header row, and full-precision scientific
notation so values round-trip losslessly.  Subcircuit export writes
``.SUBCKT <name> <ports>`` ... ``.ENDS`` bodies made of R/C/L/G lines that
re-import through the netlist parser; the re-imported circuit matches the
source model's DC behavior to solver precision.
"""

from __future__ import annotations

import re
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.sparse

from .circuit.mna import dc_solve
from .circuit.netlist import ISource, Netlist, VSource, parse_netlist
from .em.coupling import CouplingModel, CouplingTable
from .em.filaments import ImpedanceTable
from .errors import ConfigError, IOError_
from .mor import ReducedModel, dc_gain
from .thermal.grid import VoxelGrid
from .thermal.network import ThermalNetwork
from .thermal.solve import ThermalSolution
from .units import fmt_si

# Full node-level export is meant for small (oracle-sized or reduced)
# networks; past this many nodes the netlist stops being a useful artifact.
MAX_EXPORT_NODES = 5000

_NODE_SANITIZE = re.compile(r"[^A-Za-z0-9_.+-]")


# ---------------------------------------------------------------------------
# CSV

def format_cell(value) -> str:
    """One CSV cell: floats in full-precision scientific notation."""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return fmt_si(float(value))
    return str(value)


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> int:
    """Write a CSV file; returns the number of data rows written."""
    count = 0
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(",".join(format_cell(v) for v in row) + "\n")
                count += 1
    except OSError as exc:
        raise IOError_(f"cannot write {path}: {exc}") from None
    return count


IMPEDANCE_CSV_HEADER = ("frequency_hz", "group", "r_ohm_per_m", "l_h_per_m")
COUPLING_CSV_HEADER = ("distance_m", "rk_ohm_per_m", "lk_h_per_m",
                       "ck_f_per_m", "gk_s_per_m")


def impedance_csv(path, table: ImpedanceTable) -> int:
    return write_csv(path, IMPEDANCE_CSV_HEADER, table.csv_rows())


def coupling_csv(path, table: CouplingTable) -> int:
    return write_csv(path, COUPLING_CSV_HEADER, table.csv_rows())


def transfer_csv(path, frequencies: np.ndarray,
                 named_h: Mapping[str, np.ndarray]) -> int:
    """|H| and phase columns per connection model, one row per frequency."""
    names = list(named_h)
    header = ["frequency_hz"]
    for n in names:
        header += [f"h_mag_{n}", f"h_phase_rad_{n}"]

    def rows():
        for k, f in enumerate(frequencies):
            row = [float(f)]
            for n in names:
                h = named_h[n][k]
                row += [abs(h), float(np.angle(h))]
            yield row

    return write_csv(path, header, rows())


def temperature_csv(path, grid: VoxelGrid, solution: ThermalSolution) -> int:
    """Voxel-center temperature field, one row per voxel (x fastest)."""
    px, py, pz = grid.pitch
    t = solution.temperature

    def rows():
        for k in range(grid.nz):
            for j in range(grid.ny):
                for i in range(grid.nx):
                    yield ((i + 0.5) * px, (j + 0.5) * py, (k + 0.5) * pz,
                           float(t[k, j, i]))

    return write_csv(path, ("x_m", "y_m", "z_m", "t_k"), rows())


# ---------------------------------------------------------------------------
# SPICE subcircuit export

def _node_token(name: str) -> str:
    token = _NODE_SANITIZE.sub("_", str(name))
    if not token or token == "0":
        raise IOError_(f"cannot use {name!r} as a subcircuit port name")
    return token


def _require_finite(values, what: str):
    arr = np.asarray(values, dtype=float)
    if arr.size and not np.all(np.isfinite(arr)):
        raise IOError_(f"non-finite value in {what}; refusing to export")


def _conductance_line(lines: list, tag: str, a: str, b: str, g: float):
    """One branch conductance: an R line when positive, a G line otherwise."""
    if g > 0:
        lines.append(f"R{tag} {a} {b} {fmt_si(1.0 / g)}")
    else:
        lines.append(f"G{tag} {a} {b} {a} {b} {fmt_si(g)}")


def _emit_conductance_matrix(lines: list, g: np.ndarray, node: Sequence[str],
                             drop_below: float):
    """Realize a symmetric nodal conductance matrix as branch elements.

    Off-diagonal entry g_ij becomes a branch of conductance -g_ij between
    nodes i and j; the row sum becomes the branch to ground (node 0).
    """
    n = g.shape[0]
    for i in range(n):
        for j in range(i + 1, n):
            branch = -g[i, j]
            if abs(branch) > drop_below:
                _conductance_line(lines, f"{i + 1}_{j + 1}", node[i], node[j], branch)
        ground = float(g[i].sum())
        if abs(ground) > drop_below:
            _conductance_line(lines, f"{i + 1}_0", node[i], "0", ground)


def _emit_capacitance_matrix(lines: list, c: np.ndarray, node: Sequence[str],
                             drop_below: float):
    n = c.shape[0]
    for i in range(n):
        for j in range(i + 1, n):
            branch = -c[i, j]
            if abs(branch) > drop_below:
                lines.append(f"C{i + 1}_{j + 1} {node[i]} {node[j]} {fmt_si(branch)}")
        ground = float(c[i].sum())
        if abs(ground) > drop_below:
            lines.append(f"C{i + 1}_0 {node[i]} 0 {fmt_si(ground)}")


def _export_coupling(model: CouplingModel, name: str) -> str:
    _require_finite([model.rk_ohm, model.lk_h, model.ck_f, model.gk_s],
                    "coupling model")
    lines = [f"* two-via coupling, separation {model.distance:g} m over "
             f"{model.length:g} m",
             f".SUBCKT {name} p1 p2"]
    if model.rk_ohm > 0 and model.lk_h > 0:
        lines.append(f"RK p1 mid {fmt_si(model.rk_ohm)}")
        lines.append(f"LK mid p2 {fmt_si(model.lk_h)}")
    elif model.rk_ohm > 0:
        lines.append(f"RK p1 p2 {fmt_si(model.rk_ohm)}")
    elif model.lk_h > 0:
        lines.append(f"LK p1 p2 {fmt_si(model.lk_h)}")
    if model.ck_f > 0:
        lines.append(f"CK p1 p2 {fmt_si(model.ck_f)}")
    if model.gk_s > 0:
        lines.append(f"GK p1 p2 p1 p2 {fmt_si(model.gk_s)}")
    lines.append(f".ENDS {name}")
    return "\n".join(lines) + "\n"


def _single_node_columns(mat: scipy.sparse.spmatrix, names: Sequence[str],
                         what: str) -> dict:
    """Map selector columns to node indices; rejects multi-node columns."""
    csc = scipy.sparse.csc_matrix(mat)
    out = {}
    for j, name in enumerate(names):
        col = csc[:, j]
        if col.nnz != 1 or abs(col.data[0] - 1.0) > 1e-12:
            raise IOError_(f"{what} {name!r} averages several nodes; only "
                           "single-node ports export directly -- reduce the "
                           "network first")
        out[name] = int(col.indices[0])
    return out


def _export_thermal(net: ThermalNetwork, name: str) -> str:
    n = net.n_nodes
    if n > MAX_EXPORT_NODES:
        raise IOError_(f"{n} nodes is too large for netlist export "
                       f"(limit {MAX_EXPORT_NODES}); reduce the network first")
    g = np.asarray(net.g.todense())
    _require_finite(g, "thermal conductance matrix")
    _require_finite(net.c, "thermal capacitance vector")

    port_nodes = _single_node_columns(net.l, net.port_names, "port")
    input_nodes = _single_node_columns(net.b, net.input_names, "input")

    node = [f"n{i + 1}" for i in range(n)]
    terminals = []
    for pname, idx in port_nodes.items():
        node[idx] = _node_token(pname)
        terminals.append(node[idx])
    for iname, idx in input_nodes.items():
        if node[idx].startswith("n") and node[idx] == f"n{idx + 1}":
            node[idx] = _node_token(iname)
            terminals.append(node[idx])

    drop = 1e-15 * max(1.0, float(np.abs(g).max()))
    lines = [f"* thermal RC network, temperatures are rises over "
             f"{net.t_ref:g} K (node 0)",
             f".SUBCKT {name} {' '.join(terminals)}"]
    _emit_conductance_matrix(lines, g, node, drop)
    for i, ci in enumerate(np.asarray(net.c, dtype=float)):
        if ci > 0:
            lines.append(f"C{i + 1} {node[i]} 0 {fmt_si(float(ci))}")
    lines.append(f".ENDS {name}")
    return "\n".join(lines) + "\n"


def _nodal_basis(model: ReducedModel):
    """Congruence-transform a reduced model so its ports become nodes.

    With Q = [L | complement] and M = Q^-1, the realization (M G M^T,
    M C M^T, M B, M L) has the identity selector as its port map, so the
    first m states are port node voltages and the transformed matrices
    stamp directly as branch elements.  Requires B == L (reciprocal ports).
    """
    b, l = model.b_hat, model.l_hat
    if b.shape != l.shape or not np.allclose(b, l, rtol=1e-9, atol=1e-30):
        raise IOError_("input and output maps differ; only reciprocal "
                       "(B == L) models export as passive subcircuits")
    q, m = l.shape
    if np.linalg.matrix_rank(l) < m:
        raise IOError_("port map is rank-deficient; cannot synthesize nodes")
    q_full, _ = np.linalg.qr(l, mode="complete")
    basis = np.hstack([l, q_full[:, m:]])
    m_inv = np.linalg.inv(basis)
    g = m_inv @ model.g_hat @ m_inv.T
    c = m_inv @ model.c_hat @ m_inv.T
    return 0.5 * (g + g.T), 0.5 * (c + c.T)


def _export_reduced(model: ReducedModel, name: str) -> str:
    _require_finite(model.g_hat, "reduced conductance matrix")
    _require_finite(model.c_hat, "reduced capacitance matrix")
    g, c = _nodal_basis(model)
    q, m = model.l_hat.shape

    node = [_node_token(p) for p in model.output_names]
    node += [f"x{i + 1}" for i in range(q - m)]
    drop_g = 1e-15 * max(1.0, float(np.abs(g).max()))
    drop_c = 1e-15 * max(1.0, float(np.abs(c).max())) if c.size else 0.0

    lines = [f"* reduced RC macromodel, order {model.order}",
             f".SUBCKT {name} {' '.join(node[:m])}"]
    _emit_conductance_matrix(lines, g, node, drop_g)
    _emit_capacitance_matrix(lines, c, node, drop_c)
    lines.append(f".ENDS {name}")
    return "\n".join(lines) + "\n"


def export_spice_subckt(obj, name: str) -> str:
    """Render a coupling model, thermal network, or reduced model as a
    SPICE subcircuit."""
    if not re.fullmatch(r"[A-Za-z][A-Za-z0-9_]*", name or ""):
        raise ConfigError(f"bad subcircuit name {name!r}")
    if isinstance(obj, CouplingModel):
        return _export_coupling(obj, name)
    if isinstance(obj, ThermalNetwork):
        return _export_thermal(obj, name)
    if isinstance(obj, ReducedModel):
        return _export_reduced(obj, name)
    raise ConfigError(f"cannot export a {type(obj).__name__} as a subcircuit")


# ---------------------------------------------------------------------------
# re-import and DC verification

def import_spice_subckt(text: str):
    """Parse an exported subcircuit; returns (name, ports, Netlist)."""
    meaningful = [ln.strip() for ln in text.splitlines()
                  if ln.strip() and not ln.lstrip().startswith("*")]
    if not meaningful or not meaningful[0].upper().startswith(".SUBCKT"):
        raise ConfigError("subcircuit text must start with .SUBCKT")
    header = meaningful[0].split()
    if len(header) < 3:
        raise ConfigError(".SUBCKT needs a name and at least one port")
    if not meaningful[-1].upper().startswith(".ENDS"):
        raise ConfigError("subcircuit text must end with .ENDS")
    name, ports = header[1], tuple(header[2:])
    netlist = parse_netlist("\n".join(meaningful[1:-1]))
    return name, ports, netlist


def dc_gain_matrix(netlist: Netlist, ports: Sequence[str]) -> np.ndarray:
    """K[i, j] = DC voltage at port i per 1 A injected into port j.

    The network must reference ground (node 0) so potentials are defined;
    for a grounded thermal/reduced subcircuit this is the L^T G^-1 B gain.
    """
    k = np.empty((len(ports), len(ports)))
    for j, pj in enumerate(ports):
        probe = ISource("ITESTDC", "0", pj, 1.0)
        result = dc_solve(Netlist(tuple(netlist.elements) + (probe,)))
        k[:, j] = [result.voltage(p) for p in ports]
    return k


def verify_spice_roundtrip(obj, name: str = "DUT") -> float:
    """Export, re-import, and compare DC gains; returns the max abs error.

    For a ThermalNetwork the reference is the exact resistance matrix
    between its terminal nodes (G^-1 restricted to them); for a
    ReducedModel it is its dc_gain().  Coupling models have no grounded DC
    gain and are checked against their own element values instead.
    """
    text = export_spice_subckt(obj, name)
    _, ports, netlist = import_spice_subckt(text)

    if isinstance(obj, CouplingModel):
        y_dir = obj.gk_s + (1.0 / obj.rk_ohm if obj.rk_ohm > 0
                            else (np.inf if obj.lk_h > 0 else 0.0))
        if y_dir == 0:
            raise ConfigError("coupling model has no DC path to verify")
        expected = 0.0 if np.isinf(y_dir) else 1.0 / y_dir
        probe = (ISource("ITESTDC", "0", ports[0], 1.0),
                 VSource("VGND", ports[1], "0", 0.0))
        result = dc_solve(Netlist(tuple(netlist.elements) + probe))
        return abs(result.voltage(ports[0]) - expected)

    if isinstance(obj, ThermalNetwork):
        lu = scipy.sparse.linalg.splu(scipy.sparse.csc_matrix(obj.g))
        ref = obj.l.T @ lu.solve(np.asarray(obj.b.todense()))
        ref = np.asarray(ref)
    else:
        ref = dc_gain(obj)
    got = dc_gain_matrix(netlist, ports)
    return float(np.max(np.abs(got - ref)))
