"""Electro-thermal relaxation loop against an independent fixed-point solve."""

import numpy as np
import pytest
import scipy.sparse as sp

from vialab.errors import ConfigError, SolverError
from vialab.circuit.etherm import electro_thermal_solve
from vialab.circuit.netlist import parse_netlist
from vialab.mor import reduce_arnoldi
from vialab.thermal.network import ThermalNetwork

GTH = 0.02  # W/K single-port conductance to ambient


def one_port_network(gth: float = GTH, t_ref: float = 300.0,
                     port: str = "dev") -> ThermalNetwork:
    eye = sp.csr_matrix(np.array([[1.0]]))
    return ThermalNetwork(sp.csr_matrix(np.array([[gth]])), np.array([1.0]),
                          eye, eye, (port,), (port,), t_ref)


def divider(alpha: float = 0.004) -> str:
    return (f"V1 in 0 5\n"
            f"RT1 in out tport=dev r0=10 t0=300 alpha={alpha}\n"
            f"R2 out 0 10\n")


def bisect_fixed_point(alpha: float, gth: float = GTH,
                       v: float = 5.0, r2: float = 10.0) -> float:
    """Scalar fixed point T = 300 + P(T)/gth solved by bisection."""
    def residual(t):
        r = 10.0 * (1.0 + alpha * (t - 300.0))
        i = v / (r + r2)
        return 300.0 + i * i * r / gth - t

    lo, hi = 300.0, 400.0
    assert residual(lo) > 0 > residual(hi)
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if residual(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def test_matches_bisection_oracle():
    net = parse_netlist(divider(0.004))
    result, state = electro_thermal_solve(net, one_port_network())
    want = bisect_fixed_point(0.004)
    assert state.converged
    assert state.iterations <= 50
    assert state.device_temperatures["RT1"] == pytest.approx(want, abs=2e-3)
    # the returned circuit solve was made at the final temperatures
    r_hot = 10.0 * (1.0 + 0.004 * (state.device_temperatures["RT1"] - 300.0))
    i = 5.0 / (r_hot + 10.0)
    assert result.voltage("out") == pytest.approx(10.0 * i, rel=1e-6)


def test_alpha_zero_converges_in_one_update():
    net = parse_netlist(divider(0.0))
    _, state = electro_thermal_solve(net, one_port_network())
    assert state.converged
    assert state.iterations == 1
    # P = (2.5)^2 / 10 = 0.625 W -> rise of 31.25 K
    assert state.device_powers["RT1"] == pytest.approx(0.625, rel=1e-12)
    assert state.device_temperatures["RT1"] == pytest.approx(
        300.0 + 0.625 / GTH, rel=1e-12)


def test_power_balance_at_convergence():
    net = parse_netlist(divider(0.004))
    result, state = electro_thermal_solve(net, one_port_network())
    i = -result.current("V1")
    p_total = 5.0 * i
    p_r2 = result.voltage("out") ** 2 / 10.0
    assert state.device_powers["RT1"] + p_r2 == pytest.approx(
        p_total, rel=1e-9)


def test_runaway_detected():
    # negative alpha: hotter -> lower R -> more power -> hotter
    net = parse_netlist(divider(-0.04))
    with pytest.raises((SolverError, ConfigError)):
        electro_thermal_solve(net, one_port_network())


def test_under_relaxation_reaches_same_fixed_point():
    net = parse_netlist(divider(0.004))
    _, fast = electro_thermal_solve(net, one_port_network())
    _, slow = electro_thermal_solve(net, one_port_network(),
                                    under_relaxation=0.5)
    assert slow.converged
    assert slow.device_temperatures["RT1"] == pytest.approx(
        fast.device_temperatures["RT1"], abs=2e-3)
    with pytest.raises(ConfigError):
        electro_thermal_solve(net, one_port_network(), under_relaxation=0.0)
    with pytest.raises(ConfigError):
        electro_thermal_solve(net, one_port_network(), under_relaxation=1.5)


def test_reduced_model_thermal_path():
    net = parse_netlist(divider(0.004))
    rom = reduce_arnoldi(one_port_network().to_state_space(), 1)
    _, via_rom = electro_thermal_solve(net, rom, ambient=300.0)
    _, via_net = electro_thermal_solve(net, one_port_network())
    assert via_rom.device_temperatures["RT1"] == pytest.approx(
        via_net.device_temperatures["RT1"], abs=2e-3)


def test_requires_temperature_dependent_devices():
    net = parse_netlist("V1 in 0 5\nR1 in 0 10\n")
    with pytest.raises(ConfigError):
        electro_thermal_solve(net, one_port_network())


def test_unknown_thermal_port_rejected():
    net = parse_netlist(divider(0.004))
    with pytest.raises(ConfigError, match="dev"):
        electro_thermal_solve(net, one_port_network(port="chip"))
    with pytest.raises(ConfigError):
        electro_thermal_solve(net, thermal="not a model")
