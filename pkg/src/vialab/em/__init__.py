"""Electromagnetic extraction: skin-effect impedance, capacitance, coupling."""

from .coupling import CouplingModel, CouplingTable, coupling_sweep
from .electrostatic import (
    PotentialField,
    charge_on_conductor,
    extract_capacitance,
    pair_capacitance,
    refinement_study,
    solve_electrostatic,
    two_cylinder_labels,
    two_wire_capacitance,
)
from .filaments import (
    CurrentDensityMap,
    FilamentSystem,
    ImpedanceSample,
    ImpedanceTable,
    default_frequency_grid,
    discretize_filaments,
    solve_impedance,
    sweep_frequency,
)
from .roundwire import round_wire_oracle, skin_depth

__all__ = [
    "CouplingModel",
    "CouplingTable",
    "CurrentDensityMap",
    "FilamentSystem",
    "ImpedanceSample",
    "ImpedanceTable",
    "PotentialField",
    "charge_on_conductor",
    "coupling_sweep",
    "default_frequency_grid",
    "discretize_filaments",
    "extract_capacitance",
    "pair_capacitance",
    "refinement_study",
    "round_wire_oracle",
    "skin_depth",
    "solve_impedance",
    "solve_electrostatic",
    "sweep_frequency",
    "two_cylinder_labels",
    "two_wire_capacitance",
]
