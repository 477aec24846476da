"""Electro-thermal relaxation: circuit power in, device temperature out.

The loop alternates (1) a DC circuit solve with each temperature-dependent
resistor evaluated at its current device temperature, (2) device power
computation P = V^2/R, (3) a steady thermal solve for the port
temperatures those powers produce, until the largest temperature update
falls below tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse.linalg

from ..errors import ConfigError, SolverError
from ..mor import ReducedModel, dc_gain
from ..thermal.network import ThermalNetwork
from .mna import AnalysisResult, dc_solve
from .netlist import EthermResistor, Netlist

DEFAULT_TOLERANCE_K = 1e-3
DEFAULT_MAX_ITERATIONS = 50
DIVERGENCE_RUN = 5


@dataclass(frozen=True)
class EthermState:
    """Converged (or last) state of the electro-thermal loop."""

    device_temperatures: dict      # name -> K
    device_powers: dict            # name -> W
    iterations: int                # temperature updates applied
    converged: bool


def _thermal_gain(thermal, devices):
    """(K matrix mapping device powers to port temperature rises, t_ref)."""
    if isinstance(thermal, ThermalNetwork):
        in_names, out_names = thermal.input_names, thermal.port_names
        t_ref = thermal.t_ref
        cols = np.asarray(
            scipy.sparse.linalg.spsolve(thermal.g.tocsc(), thermal.b.toarray()))
        if cols.ndim == 1:
            cols = cols[:, None]
        gain = np.asarray(thermal.l.T @ cols)     # (p, m)
    elif isinstance(thermal, ReducedModel):
        in_names, out_names = thermal.input_names, thermal.output_names
        t_ref = None
        gain = dc_gain(thermal)
    else:
        raise ConfigError(
            "thermal model must be a ThermalNetwork or ReducedModel, "
            f"got {type(thermal).__name__}")

    rows, cols_idx = [], []
    for dev in devices:
        if dev.tport not in out_names:
            raise ConfigError(f"{dev.name}: thermal model has no port "
                              f"{dev.tport!r} (ports: {list(out_names)})")
        if dev.tport not in in_names:
            raise ConfigError(f"{dev.name}: thermal model has no power input "
                              f"{dev.tport!r} (inputs: {list(in_names)})")
        rows.append(out_names.index(dev.tport))
        cols_idx.append(in_names.index(dev.tport))
    return gain[np.ix_(rows, cols_idx)], t_ref


def _device_powers(netlist: Netlist, devices, result: AnalysisResult,
                   temps: np.ndarray) -> np.ndarray:
    p = np.empty(len(devices))
    for k, dev in enumerate(devices):
        v1 = result.voltage(dev.n1) if dev.n1 != "0" else 0.0
        v2 = result.voltage(dev.n2) if dev.n2 != "0" else 0.0
        r = dev.resistance_at(temps[k])
        p[k] = (v1 - v2) ** 2 / r
    return p


def electro_thermal_solve(netlist: Netlist, thermal,
                          tolerance: float = DEFAULT_TOLERANCE_K,
                          max_iterations: int = DEFAULT_MAX_ITERATIONS,
                          under_relaxation: float = 1.0,
                          ambient: float = 300.0):
    """Relax circuit and thermal solves to a consistent operating point.

    Returns (AnalysisResult of the final circuit solve, EthermState).  The
    iteration count is the number of temperature updates actually applied;
    a temperature-independent circuit (alpha = 0) therefore converges
    after exactly one.  ``ambient`` is used as the reference temperature
    when the thermal model is a ReducedModel (a ThermalNetwork carries its
    own); under-relaxation < 1 damps oscillating updates.
    """
    if not 0 < under_relaxation <= 1.0:
        raise ConfigError("under_relaxation must be in (0, 1]")
    devices = list(netlist.of_type(EthermResistor))
    if not devices:
        raise ConfigError("netlist has no temperature-dependent devices")
    gain, t_ref = _thermal_gain(thermal, devices)
    if t_ref is None:
        t_ref = ambient

    temps = np.full(len(devices), t_ref)
    updates_applied = 0
    growth_run = 0
    prev_step = None
    converged = False
    result = None
    for _ in range(max_iterations + 1):
        element_temps = {d.name: float(t) for d, t in zip(devices, temps)}
        result = dc_solve(netlist, element_temps=element_temps)
        powers = _device_powers(netlist, devices, result, temps)
        target = t_ref + gain @ powers
        step = float(np.abs(target - temps).max())
        if step < tolerance:
            converged = True
            break
        if prev_step is not None and step > prev_step:
            growth_run += 1
            if growth_run >= DIVERGENCE_RUN:
                raise SolverError(
                    f"electro-thermal loop diverging ({DIVERGENCE_RUN} "
                    f"consecutive growing updates, last {step:.3e} K); "
                    "try under_relaxation < 1")
        else:
            growth_run = 0
        prev_step = step
        if updates_applied >= max_iterations:
            break
        temps = temps + under_relaxation * (target - temps)
        updates_applied += 1

    powers = _device_powers(netlist, devices, result, temps)
    state = EthermState(
        device_temperatures={d.name: float(t) for d, t in zip(devices, temps)},
        device_powers={d.name: float(p) for d, p in zip(devices, powers)},
        iterations=updates_applied,
        converged=converged,
    )
    return result, state
