"""Netlist text parsing: element grammar, includes, and validation."""

import numpy as np
import pytest

from vialab.errors import ConfigError
from vialab.circuit.netlist import (Capacitor, EthermResistor, FreqDepResistor,
                                    ISource, Inductor, Netlist, Resistor,
                                    TLine, VCCS, VSource, parse_netlist)


def test_parse_basic_elements():
    net = parse_netlist("""
* comment line
R1 in out 1k
C1 out 0 10n
L1 out tail 2u
V1 in 0 5 ac 1
I1 0 tail 1m
""")
    kinds = {e.name: type(e).__name__ for e in net.elements}
    assert kinds == {"R1": "Resistor", "C1": "Capacitor", "L1": "Inductor",
                     "V1": "VSource", "I1": "ISource"}
    r1 = next(e for e in net.elements if e.name == "R1")
    assert r1.ohms == 1000.0
    v1 = next(e for e in net.elements if e.name == "V1")
    assert v1.dc == 5.0 and v1.ac == 1.0


def test_parse_initial_conditions():
    net = parse_netlist("C1 a 0 1u ic=2.5\nL1 a 0 1m ic=0.1\nR1 a 0 1\n")
    c = next(e for e in net.elements if e.name == "C1")
    ind = next(e for e in net.elements if e.name == "L1")
    assert c.ic == 2.5
    assert ind.ic == pytest.approx(0.1)


def test_parse_vccs():
    net = parse_netlist("G1 out 0 in 0 2m\nR1 out 0 1k\nRi in 0 1k\n")
    g = next(e for e in net.elements if e.name == "G1")
    assert isinstance(g, VCCS)
    assert (g.n1, g.n2, g.nc1, g.nc2) == ("out", "0", "in", "0")
    assert g.gm == pytest.approx(2e-3)


def test_parse_thermal_resistor_before_plain_r():
    net = parse_netlist(
        "RT1 in out tport=dev r0=10 t0=300 alpha=0.004\nR2 out 0 10\n")
    rt = next(e for e in net.elements if e.name == "RT1")
    assert isinstance(rt, EthermResistor)
    assert rt.tport == "dev"
    assert rt.r0 == 10.0 and rt.t0 == 300.0 and rt.alpha == pytest.approx(4e-3)


def test_parse_freq_dep_resistor_table(tmp_path):
    table = tmp_path / "rf.csv"
    table.write_text("1e6,10\n1e9,20\n")
    net = parse_netlist(f"RF1 a b table={table.name}\nR1 a 0 1\nR2 b 0 1\n",
                        base_dir=str(tmp_path))
    rf = next(e for e in net.elements if e.name == "RF1")
    assert isinstance(rf, FreqDepResistor)
    np.testing.assert_allclose(rf.frequencies, [1e6, 1e9])
    np.testing.assert_allclose(rf.ohms, [10.0, 20.0])


def test_parse_transmission_line():
    net = parse_netlist(
        "T1 a 0 b 0 rpul=5e3 lpul=2.5e-7 gpul=0 cpul=1e-10 len=0.02\n"
        "R1 a 0 50\nR2 b 0 50\n")
    t = next(e for e in net.elements if e.name == "T1")
    assert isinstance(t, TLine)
    assert t.length == pytest.approx(0.02)


def test_tline_references_must_be_grounded():
    with pytest.raises(ConfigError, match="ground"):
        parse_netlist(
            "T1 a x b 0 rpul=1 lpul=1n gpul=0 cpul=1p len=0.02\nR1 a 0 1\n")


def test_reduced_block_include(tmp_path):
    import scipy.sparse as sp
    from vialab.mor import StateSpaceRC, reduce_arnoldi, save_reduced
    g = sp.csr_matrix(np.array([[2.0, -1.0], [-1.0, 2.0]]))
    c = sp.identity(2, format="csr") * 1e-6
    b = sp.csr_matrix(np.array([[1.0, 0.0], [0.0, 1.0]]))
    red = reduce_arnoldi(
        StateSpaceRC(g=g, c=c, b=b, l=b.copy(),
                     input_names=("p1", "p2"), output_names=("p1", "p2")),
        order=2)
    save_reduced(red, tmp_path / "block.rom")
    net = parse_netlist("I1 0 a 1\nX1 a b model=block.rom\nR1 b 0 1\n",
                        base_dir=str(tmp_path))
    x = next(e for e in net.elements if e.name == "X1")
    assert x.ports == ("a", "b")
    assert x.model.order == 2


def test_zero_resistance_rejected():
    with pytest.raises(ConfigError):
        parse_netlist("R1 a 0 0\n")


def test_nonzero_negative_capacitance_allowed():
    # synthesized macromodels legitimately produce negative branch caps
    net = parse_netlist("C1 a 0 -1p\nR1 a 0 1\n")
    c = next(e for e in net.elements if e.name == "C1")
    assert c.farads == -1e-12


def test_zero_capacitance_rejected():
    with pytest.raises(ConfigError):
        Capacitor("C1", "a", "0", 0.0)


def test_unknown_element_letter_reported():
    with pytest.raises(ConfigError, match="Q1"):
        parse_netlist("Q1 a b c 1\n")


def test_malformed_card_reports_line():
    with pytest.raises(ConfigError, match="R1"):
        parse_netlist("R1 a 0\n")


def test_duplicate_names_rejected():
    with pytest.raises(ConfigError, match="R1"):
        parse_netlist("R1 a 0 1\nR1 a 0 2\n")
