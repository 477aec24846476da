"""CSV writers and SPICE subcircuit export / re-import round-trips."""

import numpy as np
import pytest
import scipy.sparse as sp

from vialab.errors import ConfigError, IOError_
from vialab.em.coupling import CouplingModel, CouplingTable
from vialab.em.filaments import ImpedanceTable
from vialab.export import (MAX_EXPORT_NODES, coupling_csv, dc_gain_matrix,
                           export_spice_subckt, format_cell, impedance_csv,
                           import_spice_subckt, temperature_csv, transfer_csv,
                           verify_spice_roundtrip, write_csv)
from vialab.materials import DEFAULT_MATERIALS
from vialab.mor import ReducedModel, StateSpaceRC, reduce_arnoldi
from vialab.stack import Layer, assemble_stack
from vialab.thermal.grid import PowerMap, PowerSource, voxelize
from vialab.thermal.network import ThermalNetwork
from vialab.thermal.solve import solve_steady


def two_node_network(g12: float = 0.5, g20: float = 2.0) -> ThermalNetwork:
    g = sp.csr_matrix(np.array([[g12, -g12], [-g12, g12 + g20]]))
    b = sp.csr_matrix(np.array([[1.0], [0.0]]))
    l = sp.csr_matrix(np.array([[1.0, 0.0], [0.0, 1.0]]))
    return ThermalNetwork(g, np.array([1e-3, 2e-3]), b, l,
                          ("dev",), ("dev", "mid"), 300.0)


def ladder_model(order: int = 4) -> ReducedModel:
    n = 12
    main = np.full(n, 2.0)
    main[0] = main[-1] = 1.2
    g = sp.diags([main, np.full(n - 1, -0.8), np.full(n - 1, -0.8)],
                 offsets=[0, -1, 1], format="csr")
    b = np.zeros((n, 2))
    b[0, 0] = b[-1, 1] = 1.0
    sys = StateSpaceRC(g, np.full(n, 1e-6), b, b.copy(),
                       ("p1", "p2"), ("p1", "p2"))
    return reduce_arnoldi(sys, order)


def test_format_cell_varieties():
    assert format_cell(True) == "1"
    assert format_cell(False) == "0"
    assert format_cell(np.int64(42)) == "42"
    assert format_cell("label") == "label"
    for x in (1.0, -2.5e-13, np.pi, 1.23456780000000003e+03):
        assert float(format_cell(x)) == x


def test_write_csv_roundtrip(tmp_path):
    path = tmp_path / "out.csv"
    n = write_csv(path, ("a", "b"), [(1, 2.5), (3, -4.0)])
    assert n == 2
    lines = path.read_text().splitlines()
    assert lines[0] == "a,b"
    assert [float(x) for x in lines[1].split(",")] == [1.0, 2.5]
    with pytest.raises(IOError_):
        write_csv("/nonexistent/dir/out.csv", ("a",), [(1,)])


def test_impedance_csv_layout(tmp_path):
    freqs = np.array([1e6, 1e9])
    z = np.array([[1.0 + 2e-9j * 2 * np.pi * 1e6],
                  [3.0 + 2e-9j * 2 * np.pi * 1e9]])
    lg = np.array([[2e-9], [2e-9]])
    table = ImpedanceTable(freqs, z, lg, z[:, :, None], np.real(z[:, 0]))
    path = tmp_path / "z.csv"
    assert impedance_csv(path, table) == 2
    lines = path.read_text().splitlines()
    assert lines[0] == "frequency_hz,group,r_ohm_per_m,l_h_per_m"
    first = lines[1].split(",")
    assert float(first[0]) == 1e6
    assert int(first[1]) == 0
    assert float(first[2]) == pytest.approx(1.0)
    assert float(first[3]) == pytest.approx(2e-9)


def test_coupling_csv_layout(tmp_path):
    table = CouplingTable(np.array([10e-6, 20e-6]), np.array([5.0, 3.0]),
                          np.array([2e-7, 1e-7]), np.array([1e-10, 5e-11]),
                          np.array([0.1, 0.05]), 1e9)
    path = tmp_path / "c.csv"
    assert coupling_csv(path, table) == 2
    lines = path.read_text().splitlines()
    assert lines[0] == "distance_m,rk_ohm_per_m,lk_h_per_m,ck_f_per_m,gk_s_per_m"
    assert float(lines[2].split(",")[1]) == pytest.approx(3.0)


def test_transfer_csv_layout(tmp_path):
    freqs = np.array([1e6, 1e7, 1e8])
    named = {"short": np.array([1.0, 0.5 + 0.5j, 0.1j]),
             "bump": np.array([0.9, 0.4, 0.05])}
    path = tmp_path / "h.csv"
    assert transfer_csv(path, freqs, named) == 3
    lines = path.read_text().splitlines()
    assert lines[0].split(",") == ["frequency_hz", "h_mag_short",
                                   "h_phase_rad_short", "h_mag_bump",
                                   "h_phase_rad_bump"]
    row = lines[2].split(",")
    assert float(row[1]) == pytest.approx(abs(0.5 + 0.5j))
    assert float(row[2]) == pytest.approx(np.pi / 4)


def test_temperature_csv_orders_x_fastest(tmp_path):
    lay = Layer(1e-4, 2e-4, 2e-4, DEFAULT_MATERIALS["silicon"])
    grid = voxelize(assemble_stack([lay], [], {}), (5e-5, 5e-5, 5e-5))
    sol = solve_steady(grid, PowerMap((PowerSource(np.array([0]), 0.1),)))
    path = tmp_path / "t.csv"
    assert temperature_csv(path, grid, sol) == grid.n_voxels
    lines = path.read_text().splitlines()
    r1, r2 = lines[1].split(","), lines[2].split(",")
    assert float(r2[0]) > float(r1[0])          # x advances first
    assert r1[1:3] == r2[1:3]                   # y, z fixed
    assert all(float(r[3]) >= 300.0 for r in (r1, r2))


def test_coupling_subckt_roundtrip():
    model = CouplingModel(5.0, 2e-7, 1e-10, 0.1, 20e-6, 1e-4)
    text = export_spice_subckt(model, "PAIR")
    assert text.startswith("* ") or text.startswith(".SUBCKT") or "*" in text
    name, ports, _ = import_spice_subckt(text)
    assert name == "PAIR"
    assert len(ports) == 2
    assert verify_spice_roundtrip(model) < 1e-9


def test_thermal_subckt_roundtrip():
    net = two_node_network()
    text = export_spice_subckt(net, "THERM")
    assert ".SUBCKT THERM dev mid" in text
    assert verify_spice_roundtrip(net) < 1e-9


def test_reduced_subckt_roundtrip():
    model = ladder_model()
    text = export_spice_subckt(model, "ROM")
    assert ".SUBCKT ROM p1 p2" in text
    assert verify_spice_roundtrip(model) < 1e-9


def test_dc_gain_matrix_is_symmetric_for_reciprocal_networks():
    _, ports, netlist = import_spice_subckt(
        export_spice_subckt(two_node_network(), "T"))
    k = dc_gain_matrix(netlist, ports)
    np.testing.assert_allclose(k, k.T, rtol=1e-9)
    # forcing 1 W into dev: T_dev - T_ref = (1/g20 + 1/g12), T_mid = 1/g20
    np.testing.assert_allclose(k[:, 0], [1 / 2.0 + 1 / 0.5, 1 / 2.0],
                               rtol=1e-9)


def test_multi_node_port_refuses_export():
    g = sp.csr_matrix(np.array([[1.0, -0.5], [-0.5, 1.0]]))
    b = sp.csr_matrix(np.array([[1.0], [0.0]]))
    l = sp.csr_matrix(np.array([[0.5], [0.5]]))  # averaged observation
    net = ThermalNetwork(g, np.array([1.0, 1.0]), b, l, ("in",), ("avg",),
                         300.0)
    with pytest.raises(IOError_, match="averages several nodes"):
        export_spice_subckt(net, "BAD")


def test_node_limit_enforced():
    n = MAX_EXPORT_NODES + 1
    g = sp.eye(n, format="csr")
    sel = sp.csr_matrix(([1.0], ([0], [0])), shape=(n, 1))
    net = ThermalNetwork(g, np.ones(n), sel, sel, ("a",), ("a",), 300.0)
    with pytest.raises(IOError_, match="too large"):
        export_spice_subckt(net, "HUGE")


def test_nonreciprocal_reduced_model_refused():
    model = ladder_model()
    lopsided = ReducedModel(model.v, model.g_hat, model.c_hat,
                            model.b_hat, 2.0 * model.l_hat, model.order,
                            model.requested_order, model.input_names,
                            model.output_names)
    with pytest.raises(IOError_, match="reciprocal"):
        export_spice_subckt(lopsided, "BAD")


def test_subckt_name_and_type_validation():
    with pytest.raises(ConfigError, match="bad subcircuit name"):
        export_spice_subckt(two_node_network(), "9lives")
    with pytest.raises(ConfigError, match="cannot export"):
        export_spice_subckt({"not": "a model"}, "DICT")


def test_import_rejects_malformed_text():
    with pytest.raises(ConfigError, match=r"\.SUBCKT"):
        import_spice_subckt("R1 a b 1.0\n")
    with pytest.raises(ConfigError, match=r"\.ENDS"):
        import_spice_subckt(".SUBCKT X a b\nR1 a b 1.0\n")
