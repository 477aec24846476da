"""Scenario runner: executes a named analysis pipeline and records a manifest.

A scenario is a declarative entry in the project config that names inputs
from the analysis sections and a pipeline kind.  The runner executes the
stages sequentially, times each one, writes CSV/SVG/netlist artifacts into
the output directory, and finishes with a ``manifest.json``.  If any stage
fails, files already written are renamed with a ``.partial`` suffix and the
error is re-raised carrying the stage name.
"""

from __future__ import annotations

import os
import time
from contextlib import contextmanager

import numpy as np
import scipy.sparse

from . import export, svgplot
from .circuit.etherm import electro_thermal_solve
from .circuit.mna import ac_sweep, dc_solve, transient_solve
from .circuit.netlist import FreqDepResistor, Netlist, parse_netlist
from .circuit.twoport import LineParams, TransferChain, cutoff_frequency
from .circuit.twoport import transfer_function as chain_transfer
from .config import ProjectConfig, build_frequency_grid
from .em.coupling import coupling_sweep
from .em.electrostatic import refinement_study, two_wire_capacitance
from .em.filaments import discretize_filaments, sweep_frequency
from .errors import ConfigError, IOError_, VialabError
from .manifest import RunManifest
from .mor import Stimulus, reduce_arnoldi, save_reduced, validate_reduction
from .stack import rotate_layer
from .thermal.grid import (Adiabatic, Convective, FixedTemperature, PowerMap,
                           PowerSource, default_boundaries, device_voxel_sets,
                           voxelize)
from .thermal.network import ThermalNetwork, extract_thermal_network, insert_thermal_vias
from .thermal.solve import solve_steady
from .version import VERSION


class _Run:
    """Collects output files and stage timings; cleans up on abort."""

    def __init__(self, out_dir: str):
        self.out_dir = out_dir
        self.outputs: list = []
        self.stage_seconds: dict = {}

    def path(self, rel_name: str) -> str:
        """Register an output file and return its absolute path."""
        if os.sep in rel_name or rel_name.startswith("."):
            raise IOError_(f"output name {rel_name!r} must be a plain file name")
        if rel_name not in self.outputs:
            self.outputs.append(rel_name)
        return os.path.join(self.out_dir, rel_name)

    @contextmanager
    def stage(self, name: str):
        start = time.perf_counter()
        try:
            yield
        except VialabError as exc:
            raise exc.__class__(f"stage {name!r}: {exc}") from exc
        finally:
            self.stage_seconds[name] = time.perf_counter() - start

    def abort(self):
        for rel in self.outputs:
            full = os.path.join(self.out_dir, rel)
            if os.path.exists(full):
                os.replace(full, full + ".partial")


def _write_text(path: str, text: str) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise IOError_(f"cannot write {path}: {exc}") from None


# ---------------------------------------------------------------------------
# shared builders

def build_netlist_from_config(config: ProjectConfig, name: str) -> Netlist:
    """Load a named netlist (inline text or file relative to the config)."""
    entry = config.data["circuit"]["netlists"].get(name)
    if entry is None:
        known = ", ".join(sorted(config.data["circuit"]["netlists"])) or "none defined"
        raise ConfigError(f"unknown netlist {name!r} (known: {known})")
    if "text" in entry:
        return parse_netlist(entry["text"], base_dir=config.base_dir)
    path = os.path.join(config.base_dir, entry["file"])
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise IOError_(f"cannot read netlist {path}: {exc}") from None
    return parse_netlist(text, base_dir=os.path.dirname(path) or ".")


def _build_boundaries(spec):
    """Face boundary conditions: config overrides on top of the defaults."""
    if spec is None:
        return None
    out = default_boundaries()
    for face, entry in spec.items():
        if entry["kind"] == "fixed":
            out[face] = FixedTemperature(entry["temperature"])
        elif entry["kind"] == "adiabatic":
            out[face] = Adiabatic()
        else:
            out[face] = Convective(entry["film_coefficient"], entry["ambient"])
    return out


def _filament_sweep(config: ProjectConfig, sweep_name: str, threads: int):
    """Discretize and sweep one named em sweep; returns its ImpedanceTable."""
    spec = config.data["em"]["sweeps"][sweep_name]
    mask = config.build_mask(spec["cross_section"])
    system = discretize_filaments(mask, config.material(spec["material"]))
    n_groups = system.n_groups
    currents = spec.get("currents")
    if currents is not None:
        if len(currents) != n_groups:
            raise ConfigError(f"sweep {sweep_name!r}: {len(currents)} currents "
                              f"for {n_groups} conductor groups")
        system = system.with_currents({g: float(c) for g, c in enumerate(currents)})
    else:
        # default drive: unit total current split equally over the groups,
        # so single and subdivided structures compare at equal total current
        system = system.with_currents({g: 1.0 / n_groups for g in range(n_groups)})
    grid = build_frequency_grid(spec["frequencies"])
    return sweep_frequency(system, grid, threads=threads)


def _build_study_variant(config: ProjectConfig, study: dict, variant: dict):
    """Stack model for one hotspot-study variant (rotations + vias)."""
    model = config.build_stack(study["stack"])
    for rot in variant["rotations"]:
        if rot["layer"] >= len(model.layers):
            raise ConfigError(f"rotation layer {rot['layer']} out of range")
        model = rotate_layer(model, rot["layer"], rot["quarter_turns"])
    if variant["via"] is not None:
        via = config.build_via(variant["via"])
        positions = [tuple(p) for p in variant["via_positions"]]
        model = insert_thermal_vias(model, positions, via)
    return model


def _solve_study_variant(config: ProjectConfig, study: dict, variant: dict):
    """Voxelize and steady-solve one variant; returns (grid, solution)."""
    model = _build_study_variant(config, study, variant)
    grid = voxelize(model, tuple(study["pitch"]), budget=study["budget"],
                    boundaries=_build_boundaries(study["boundaries"]))
    sets = device_voxel_sets(model, grid)
    power = study["device_power"]
    n_dev = len(model.devices)
    watts = power if isinstance(power, list) else [power] * n_dev
    sources = tuple(PowerSource(sets[f"dev{i}"], float(watts[i]))
                    for i in range(n_dev))
    return grid, solve_steady(grid, PowerMap(sources))


def build_device_thermal_network(conductances: dict, ambient: float) -> ThermalNetwork:
    """Independent one-node-per-device network: G to ambient per device (W/K)."""
    names = tuple(conductances)
    g = scipy.sparse.diags([float(conductances[n]) for n in names],
                           format="csr")
    eye = scipy.sparse.identity(len(names), format="csr")
    return ThermalNetwork(g, np.ones(len(names)), eye, eye, names, names,
                          float(ambient))


def _transfer_results(config: ProjectConfig, case: dict):
    """Run the ABCD chain for every connection model; keeps config order."""
    line1 = LineParams(**case["line1"])
    line2 = (LineParams(**case["line2"]) if case["line2"] is not None
             else LineParams(0.0, 0.0, 0.0, 0.0, 0.0))
    grid = build_frequency_grid(case["frequencies"])
    out = {}
    for cname, conn in case["connections"].items():
        if conn["kind"] == "short":
            via = None
        elif conn["kind"] == "fixed":
            via = conn["ohms"]
        else:
            via = FreqDepResistor(f"RV{cname}", "a", "b",
                                  tuple(conn["frequencies"]),
                                  tuple(conn["ohms"]), clamp=conn["clamp"])
        chain = TransferChain(case["source_resistance"], line1, via, line2,
                              case["load_resistance"])
        out[cname] = chain_transfer(chain, grid)
    return grid, out


# ---------------------------------------------------------------------------
# scenario kinds

def _run_resistance_sweep(config, scen, run: _Run, name: str, threads: int):
    tables = {}
    for sweep_name in scen["sweeps"]:
        with run.stage(f"em_extract[{sweep_name}]"):
            tables[sweep_name] = _filament_sweep(config, sweep_name, threads)
        export.impedance_csv(run.path(f"{name}_{sweep_name}.csv"),
                             tables[sweep_name])

    with run.stage("export"):
        grids = [tuple(t.frequencies.tolist()) for t in tables.values()]
        if len(set(grids)) == 1:
            header = ["frequency_hz"] + [f"r_eff_{s}_ohm_per_m" for s in tables]
            rows = ([f] + [float(t.r_eff[k]) for t in tables.values()]
                    for k, f in enumerate(next(iter(tables.values())).frequencies))
            export.write_csv(run.path(f"{name}_comparison.csv"), header, rows)
        series = []
        for sweep_name, table in tables.items():
            keep = table.frequencies > 0
            series.append(svgplot.Series(sweep_name, table.frequencies[keep],
                                         table.r_eff[keep]))
        style = svgplot.PlotStyle(title=scen["title"], x_label="frequency (Hz)",
                                  y_label="effective resistance (ohm/m)",
                                  x_scale="log", y_scale="log")
        svgplot.write_plot(run.path(f"{name}.svg"), series, style)


def _run_capacitance_refinement(config, scen, run: _Run, name: str, threads: int):
    case = config.data["em"]["capacitance"][scen["case"]]
    er = config.material(case["dielectric"]).relative_permittivity
    with run.stage("refine"):
        caps = refinement_study(case["radius"], case["distance"], er,
                                steps=case["refinement_steps"],
                                box_factor=case["box_factor"])
    with run.stage("export"):
        analytic = two_wire_capacitance(case["radius"], case["distance"], er)
        rows = []
        for k, c in enumerate(caps):
            pitch = case["radius"] / (5 * 2 ** k)
            rows.append((k, pitch, c, analytic, (c - analytic) / analytic))
        export.write_csv(run.path(f"{name}.csv"),
                         ("step", "pitch_m", "c_f_per_m", "analytic_f_per_m",
                          "rel_error"), rows)
        series = [svgplot.Series("abs(rel error)",
                                 np.arange(len(caps), dtype=float),
                                 np.abs([r[4] for r in rows]))]
        style = svgplot.PlotStyle(title=scen["title"], x_label="refinement step",
                                  y_label="|relative error|", y_scale="log")
        svgplot.write_plot(run.path(f"{name}.svg"), series, style)


def _run_coupling_sweep(config, scen, run: _Run, name: str, threads: int):
    case = config.data["em"]["coupling"][scen["case"]]
    with run.stage("sweep"):
        table = coupling_sweep(case["radius"], case["distances"],
                               substrate=config.material(case["substrate"]),
                               conductor=config.material(case["conductor"]),
                               frequency=case["frequency"],
                               cell_size=case["cell_size"])
    with run.stage("export"):
        export.coupling_csv(run.path(f"{name}.csv"), table)
        if scen["export_subcircuits"]:
            for idx in range(table.distances.size):
                model = table.model_at(idx, scen["subcircuit_length"])
                text = export.export_spice_subckt(model, f"COUPLING{idx}")
                _write_text(run.path(f"{name}_coupling{idx}.cir"), text)


def _run_hotspot_study(config, scen, run: _Run, name: str, threads: int):
    study = config.data["thermal"]["studies"][scen["study"]]
    rows = []
    for vname, variant in study["variants"].items():
        with run.stage(f"solve[{vname}]"):
            grid, solution = _solve_study_variant(config, study, variant)
        i, j, k = solution.hotspot
        rows.append((vname, solution.t_max, i, j, k, solution.energy_residual))
        if scen["write_fields"]:
            export.temperature_csv(run.path(f"{name}_{vname}_field.csv"),
                                   grid, solution)
    export.write_csv(run.path(f"{name}_summary.csv"),
                     ("variant", "t_max_k", "hotspot_i", "hotspot_j",
                      "hotspot_k", "energy_residual"), rows)


def _run_transfer_comparison(config, scen, run: _Run, name: str, threads: int):
    case = config.data["circuit"]["transfers"][scen["case"]]
    with run.stage("transfer"):
        grid, results = _transfer_results(config, case)
    with run.stage("export"):
        export.transfer_csv(run.path(f"{name}.csv"), grid,
                            {c: r.h for c, r in results.items()})
        export.write_csv(run.path(f"{name}_cutoffs.csv"),
                         ("connection", "cutoff_hz"),
                         ((c, cutoff_frequency(r)) for c, r in results.items()))
        series = [svgplot.Series(c, grid, np.abs(r.h))
                  for c, r in results.items()]
        style = svgplot.PlotStyle(title=scen["title"], x_label="frequency (Hz)",
                                  y_label="|H|", x_scale="log", y_scale="log")
        svgplot.write_plot(run.path(f"{name}.svg"), series, style)


def _run_thermal_reduction(config, scen, run: _Run, name: str, threads: int):
    case = config.data["mor"]["reductions"][scen["case"]]
    with run.stage("voxelize"):
        model = config.build_stack(case["stack"])
        grid = voxelize(model, tuple(case["pitch"]), budget=case["budget"])
        ports = device_voxel_sets(model, grid)
    with run.stage("extract"):
        network = extract_thermal_network(grid, ports)
        full = network.to_state_space()
    with run.stage("reduce"):
        reduced = reduce_arnoldi(full, case["order"])
    with run.stage("validate"):
        stim = Stimulus(**case["stimulus"])
        freq_grid = (build_frequency_grid(case["freq_grid"])
                     if case["freq_grid"] is not None else None)
        report = validate_reduction(full, reduced, stim, freq_grid=freq_grid)
    with run.stage("export"):
        save_reduced(reduced, run.path(f"{name}.rom"))
        rows = [("nodes", full.order),
                ("order", report["order"]),
                ("breakdown", int(report["breakdown"])),
                ("max_relative_error", report["max_relative_error"]),
                ("rms_relative_error", report["rms_relative_error"])]
        if report.get("max_freq_response_error") is not None:
            rows.append(("max_freq_response_error",
                         report["max_freq_response_error"]))
        export.write_csv(run.path(f"{name}_metrics.csv"), ("metric", "value"),
                         rows)
        if scen["export_subcircuit"]:
            text = export.export_spice_subckt(reduced, "REDUCED")
            _write_text(run.path(f"{name}.cir"), text)


def _run_etherm(config, scen, run: _Run, name: str, threads: int):
    case = config.data["circuit"]["etherm"][scen["case"]]
    with run.stage("load"):
        netlist = build_netlist_from_config(config, case["netlist"])
        thermal = build_device_thermal_network(case["conductance_to_ambient"],
                                               case["ambient"])
    with run.stage("relax"):
        result, state = electro_thermal_solve(
            netlist, thermal,
            tolerance=case["tolerance"],
            max_iterations=case["max_iterations"],
            under_relaxation=case["under_relaxation"],
            ambient=case["ambient"])
    with run.stage("export"):
        export.write_csv(run.path(f"{name}_devices.csv"),
                         ("device", "temperature_k", "power_w"),
                         ((d, state.device_temperatures[d],
                           state.device_powers[d])
                          for d in state.device_temperatures))
        export.write_csv(run.path(f"{name}_summary.csv"),
                         ("iterations", "converged", "kcl_residual"),
                         [(state.iterations, int(state.converged),
                           result.kcl_residual)])


_DISPATCH = {
    "resistance_sweep": _run_resistance_sweep,
    "capacitance_refinement": _run_capacitance_refinement,
    "coupling_sweep": _run_coupling_sweep,
    "hotspot_study": _run_hotspot_study,
    "transfer_comparison": _run_transfer_comparison,
    "thermal_reduction": _run_thermal_reduction,
    "etherm": _run_etherm,
}


def run_scenario(config: ProjectConfig, name: str, out_dir,
                 threads: int = 1) -> RunManifest:
    """Execute one named scenario; returns the written manifest."""
    scen = config.scenario(name)
    if threads < 1:
        raise ConfigError("threads must be >= 1")
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as exc:
        raise IOError_(f"cannot create output directory {out_dir}: {exc}") from None

    run = _Run(os.fspath(out_dir))
    try:
        _DISPATCH[scen["kind"]](config, scen, run, name, threads)
    except BaseException:
        run.abort()
        raise
    manifest = RunManifest(name, config.sha256(), VERSION,
                           tuple(sorted(run.outputs)), run.stage_seconds)
    manifest.write(run.out_dir)
    return manifest
