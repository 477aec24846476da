"""Nodal analysis engine: DC, AC sweeps, and trapezoidal transients."""

import numpy as np
import pytest

from vialab.errors import CapabilityError, ConfigError, SolverError
from vialab.circuit.mna import ac_sweep, dc_solve, transient_solve
from vialab.circuit.netlist import parse_netlist


def test_dc_divider_is_exact():
    net = parse_netlist("V1 in 0 5\nR1 in out 1k\nR2 out 0 1k\n")
    res = dc_solve(net)
    assert res.voltage("out") == pytest.approx(2.5, abs=1e-12)
    assert res.voltage("in") == pytest.approx(5.0, abs=1e-12)
    assert res.kcl_residual < 1e-9


def test_dc_vsource_branch_current():
    net = parse_netlist("V1 in 0 5\nR1 in 0 1k\n")
    res = dc_solve(net)
    assert res.current("V1") == pytest.approx(-5e-3, rel=1e-12)


def test_dc_current_source():
    net = parse_netlist("I1 0 a 2m\nR1 a 0 1k\n")
    res = dc_solve(net)
    assert res.voltage("a") == pytest.approx(2.0, rel=1e-12)


def test_vccs_gain_stage():
    net = parse_netlist(
        "V1 in 0 1\nRi in 0 1k\nG1 0 out in 0 2m\nRl out 0 5k\n")
    res = dc_solve(net)
    # v_out = gm * v_in * Rl = 2m * 1 * 5k
    assert res.voltage("out") == pytest.approx(10.0, rel=1e-12)


def test_floating_node_reported():
    net = parse_netlist("V1 in 0 1\nR1 in out 1k\nR2 far far2 1k\n")
    with pytest.raises((ConfigError, SolverError), match="far"):
        dc_solve(net)


def test_ac_rc_pole():
    net = parse_netlist("V1 in 0 0 ac 1\nR1 in out 1k\nC1 out 0 159.15n\n")
    f3 = 1.0 / (2 * np.pi * 1e3 * 159.15e-9)
    res = ac_sweep(net, np.array([f3 / 100, f3, 100 * f3]))
    vout = res.voltages[:, res.node_index["out"]]
    assert abs(vout[0]) == pytest.approx(1.0, rel=1e-4)
    assert abs(vout[1]) == pytest.approx(1 / np.sqrt(2), rel=1e-6)
    assert abs(vout[2]) == pytest.approx(0.01, rel=1e-2)
    # phase at the pole is -45 degrees
    assert np.angle(vout[1]) == pytest.approx(-np.pi / 4, rel=1e-6)


def test_ac_inductor_impedance():
    net = parse_netlist("V1 in 0 0 ac 1\nR1 in out 100\nL1 out 0 1u\n")
    f = 100 / (2 * np.pi) * 1e6  # omega L = 100 ohm
    res = ac_sweep(net, np.array([f]))
    vout = res.voltages[0, res.node_index["out"]]
    assert abs(vout) == pytest.approx(1 / np.sqrt(2), rel=1e-9)


def test_ac_threads_match_serial():
    net = parse_netlist("V1 in 0 0 ac 1\nR1 in out 1k\nC1 out 0 1n\n")
    grid = np.geomspace(1e3, 1e9, 13)
    a = ac_sweep(net, grid, threads=1)
    b = ac_sweep(net, grid, threads=4)
    assert np.array_equal(a.voltages, b.voltages)


def test_freq_dep_resistor_interpolates_in_ac():
    net = parse_netlist("V1 in 0 0 ac 1\nR1 in out 1k\nC1 out 0 1n\n")
    # replace R1 by a table worth the same at low f, double at high f
    from vialab.circuit.netlist import FreqDepResistor, Netlist
    elems = tuple(e for e in net.elements if e.name != "R1")
    rf = FreqDepResistor("R1", "in", "out",
                         np.array([1e3, 1e9]), np.array([1e3, 2e3]),
                         clamp=True)
    net2 = Netlist(elements=elems + (rf,))
    res = ac_sweep(net2, np.array([1e3]))
    want = ac_sweep(net, np.array([1e3]))
    np.testing.assert_allclose(res.voltages, want.voltages, rtol=1e-9)


def test_transient_rc_charge_curve():
    net = parse_netlist("V1 in 0 1\nR1 in out 1k\nC1 out 0 1u\n")
    tau = 1e-3
    res = transient_solve(net, dt=tau / 200, t_end=3 * tau)
    v = res.voltages[:, res.node_index["out"]]
    t = res.times
    want = 1.0 - np.exp(-t / tau)
    assert np.abs(v - want).max() < 2e-3


def test_transient_honors_initial_conditions():
    net = parse_netlist("R1 a 0 1k\nC1 a 0 1u ic=2\n")
    res = transient_solve(net, dt=5e-6, t_end=1e-3)
    v = res.voltages[:, res.node_index["a"]]
    assert v[0] == pytest.approx(2.0, rel=1e-3)
    want = 2.0 * np.exp(-res.times / 1e-3)
    assert np.abs(v - want).max() < 5e-3


def test_transient_lc_oscillator_conserves_amplitude():
    """The trapezoidal rule is symplectic: no artificial damping in LC."""
    net = parse_netlist("C1 a 0 1n ic=1\nL1 a 0 1u\n")
    f0 = 1.0 / (2 * np.pi * np.sqrt(1e-6 * 1e-9))
    period = 1.0 / f0
    res = transient_solve(net, dt=period / 400, t_end=20 * period)
    v = res.voltages[:, res.node_index["a"]]
    n4 = len(v) // 4
    first = np.abs(v[:n4]).max()
    last = np.abs(v[-n4:]).max()
    assert last == pytest.approx(first, rel=1e-3)
    assert first == pytest.approx(1.0, rel=1e-3)


def test_transient_rejects_rf_elements():
    net = parse_netlist("V1 in 0 1\nR1 in out 1k\nC1 out 0 1n\n")
    from vialab.circuit.netlist import FreqDepResistor, Netlist
    rf = FreqDepResistor("RF1", "out", "0",
                         np.array([1e6, 1e9]), np.array([10.0, 20.0]))
    net2 = Netlist(elements=net.elements + (rf,))
    with pytest.raises(CapabilityError):
        transient_solve(net2, dt=1e-9, t_end=1e-7)


def test_dc_treats_inductor_as_short_and_capacitor_as_open():
    net = parse_netlist(
        "V1 in 0 2\nR1 in mid 1k\nL1 mid out 1m\nR2 out 0 1k\nC1 out 0 1n\n")
    res = dc_solve(net)
    assert res.voltage("out") == pytest.approx(1.0, rel=1e-12)
    assert res.voltage("mid") == pytest.approx(res.voltage("out"), rel=1e-12)
