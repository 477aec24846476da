"""Circuit analysis: netlists, MNA solvers, ABCD chains, electro-thermal."""

from .etherm import EthermState, electro_thermal_solve
from .mna import AnalysisResult, ac_sweep, dc_solve, transient_solve
from .netlist import (
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
    parse_netlist,
)
from .twoport import LineParams, TransferChain, cutoff_frequency, transfer_function

__all__ = [
    "AnalysisResult",
    "Capacitor",
    "EthermResistor",
    "EthermState",
    "FreqDepResistor",
    "ISource",
    "Inductor",
    "LineParams",
    "Netlist",
    "ReducedBlock",
    "Resistor",
    "TLine",
    "TransferChain",
    "VCCS",
    "VSource",
    "ac_sweep",
    "cutoff_frequency",
    "dc_solve",
    "electro_thermal_solve",
    "parse_netlist",
    "transfer_function",
    "transient_solve",
]
