"""Command-line interface: one subcommand per analysis type.

Every subcommand reads a project config (``--config``), writes artifacts
into ``--out-dir``, and exits 0 on success, 1 on configuration errors, 2 on
solver/convergence errors, and 3 on I/O errors.  ``--threads`` caps worker
parallelism inside frequency sweeps; ``--seed`` is accepted for forward
compatibility (all analyses are deterministic, nothing consumes it).
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import export, svgplot
from .config import ProjectConfig, build_frequency_grid, parse_config
from .errors import ConfigError, IOError_, SolverError, VialabError
from .scenarios import (build_device_thermal_network, build_netlist_from_config,
                        run_scenario, _filament_sweep, _solve_study_variant,
                        _transfer_results)
from .version import VERSION

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_SOLVER = 2
EXIT_IO = 3


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems as configuration errors."""

    def error(self, message):
        raise ConfigError(message)


def _add_common(sub: argparse.ArgumentParser):
    sub.add_argument("--config", required=True, help="project config (JSON)")
    sub.add_argument("--out-dir", required=True, help="output directory")
    sub.add_argument("--threads", type=int, default=1,
                     help="worker threads for sweeps (default 1)")
    sub.add_argument("--seed", type=int, default=None,
                     help="reserved; analyses are deterministic")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="vialab",
                     description="Via/interconnect extraction, thermal "
                                 "analysis, model reduction, and circuit "
                                 "simulation from one JSON config.")
    parser.add_argument("--version", action="version", version=VERSION)
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("extract-z", help="frequency-dependent impedance sweep")
    _add_common(p)
    p.add_argument("--sweep", required=True, help="name under em.sweeps")

    p = subs.add_parser("extract-c", help="electrostatic capacitance refinement")
    _add_common(p)
    p.add_argument("--case", required=True, help="name under em.capacitance")

    p = subs.add_parser("coupling-sweep", help="via-pair coupling vs separation")
    _add_common(p)
    p.add_argument("--case", required=True, help="name under em.coupling")

    p = subs.add_parser("thermal", help="steady hotspot solve of a stack study")
    _add_common(p)
    p.add_argument("--study", required=True, help="name under thermal.studies")
    p.add_argument("--variant", default=None,
                   help="solve only this variant (default: all)")
    p.add_argument("--write-fields", action="store_true",
                   help="also write per-voxel temperature CSVs")

    p = subs.add_parser("reduce", help="extract and reduce a thermal RC network")
    _add_common(p)
    p.add_argument("--case", required=True, help="name under mor.reductions")

    p = subs.add_parser("ac", help="AC sweep of a configured netlist analysis")
    _add_common(p)
    p.add_argument("--analysis", required=True, help="name under circuit.analyses")

    p = subs.add_parser("tf", help="line-via-line transfer-function comparison")
    _add_common(p)
    p.add_argument("--case", required=True, help="name under circuit.transfers")

    p = subs.add_parser("etherm", help="electro-thermal relaxation of a netlist")
    _add_common(p)
    p.add_argument("--case", required=True, help="name under circuit.etherm")

    p = subs.add_parser("run", help="run a named scenario pipeline")
    _add_common(p)
    p.add_argument("scenario", help="name under scenarios")

    return parser


def _prepare(args) -> ProjectConfig:
    config = parse_config(args.config)
    try:
        os.makedirs(args.out_dir, exist_ok=True)
    except OSError as exc:
        raise IOError_(f"cannot create output directory {args.out_dir}: {exc}") \
            from None
    if args.threads < 1:
        raise ConfigError("--threads must be >= 1")
    return config


def _entry(config: ProjectConfig, section: str, sub: str, name: str, what: str):
    table = config.data[section][sub]
    if name not in table:
        known = ", ".join(sorted(table)) or "none defined"
        raise ConfigError(f"unknown {what} {name!r} (known: {known})")
    return table[name]


def _cmd_extract_z(args) -> int:
    config = _prepare(args)
    _entry(config, "em", "sweeps", args.sweep, "em sweep")
    table = _filament_sweep(config, args.sweep, args.threads)
    out = os.path.join(args.out_dir, f"impedance_{args.sweep}.csv")
    export.impedance_csv(out, table)
    print(f"wrote {out} ({table.frequencies.size} frequencies, "
          f"{table.n_groups} groups)")
    return EXIT_OK


def _cmd_extract_c(args) -> int:
    from .em.electrostatic import refinement_study, two_wire_capacitance

    config = _prepare(args)
    case = _entry(config, "em", "capacitance", args.case, "capacitance case")
    er = config.material(case["dielectric"]).relative_permittivity
    caps = refinement_study(case["radius"], case["distance"], er,
                            steps=case["refinement_steps"],
                            box_factor=case["box_factor"])
    analytic = two_wire_capacitance(case["radius"], case["distance"], er)
    rows = [(k, case["radius"] / (5 * 2 ** k), c, analytic,
             (c - analytic) / analytic) for k, c in enumerate(caps)]
    out = os.path.join(args.out_dir, f"capacitance_{args.case}.csv")
    export.write_csv(out, ("step", "pitch_m", "c_f_per_m", "analytic_f_per_m",
                           "rel_error"), rows)
    print(f"wrote {out} (final error {rows[-1][4]:+.3%})")
    return EXIT_OK


def _cmd_coupling(args) -> int:
    from .em.coupling import coupling_sweep

    config = _prepare(args)
    case = _entry(config, "em", "coupling", args.case, "coupling case")
    table = coupling_sweep(case["radius"], case["distances"],
                           substrate=config.material(case["substrate"]),
                           conductor=config.material(case["conductor"]),
                           frequency=case["frequency"],
                           cell_size=case["cell_size"])
    out = os.path.join(args.out_dir, f"coupling_{args.case}.csv")
    export.coupling_csv(out, table)
    print(f"wrote {out} ({table.distances.size} separations)")
    return EXIT_OK


def _cmd_thermal(args) -> int:
    config = _prepare(args)
    study = _entry(config, "thermal", "studies", args.study, "thermal study")
    variants = study["variants"]
    if args.variant is not None:
        if args.variant not in variants:
            raise ConfigError(f"unknown variant {args.variant!r} "
                              f"(known: {', '.join(sorted(variants))})")
        variants = {args.variant: variants[args.variant]}
    rows = []
    for vname, variant in variants.items():
        grid, solution = _solve_study_variant(config, study, variant)
        i, j, k = solution.hotspot
        rows.append((vname, solution.t_max, i, j, k, solution.energy_residual))
        print(f"{vname}: T_max = {solution.t_max:.3f} K at voxel ({i}, {j}, {k})")
        if args.write_fields:
            export.temperature_csv(
                os.path.join(args.out_dir, f"thermal_{args.study}_{vname}.csv"),
                grid, solution)
    out = os.path.join(args.out_dir, f"thermal_{args.study}_summary.csv")
    export.write_csv(out, ("variant", "t_max_k", "hotspot_i", "hotspot_j",
                           "hotspot_k", "energy_residual"), rows)
    print(f"wrote {out}")
    return EXIT_OK


def _cmd_reduce(args) -> int:
    from .mor import Stimulus, reduce_arnoldi, save_reduced, validate_reduction
    from .thermal.grid import device_voxel_sets, voxelize
    from .thermal.network import extract_thermal_network

    config = _prepare(args)
    case = _entry(config, "mor", "reductions", args.case, "reduction case")
    model = config.build_stack(case["stack"])
    grid = voxelize(model, tuple(case["pitch"]), budget=case["budget"])
    network = extract_thermal_network(grid, device_voxel_sets(model, grid))
    full = network.to_state_space()
    reduced = reduce_arnoldi(full, case["order"])
    report = validate_reduction(full, reduced, Stimulus(**case["stimulus"]),
                                freq_grid=(build_frequency_grid(case["freq_grid"])
                                           if case["freq_grid"] is not None
                                           else None))
    out = os.path.join(args.out_dir, f"reduced_{args.case}.rom")
    save_reduced(reduced, out)
    print(f"wrote {out} (order {report['order']} of {full.order} nodes, "
          f"max step error {report['max_relative_error']:.3e})")
    return EXIT_OK


def _cmd_ac(args) -> int:
    from .circuit.mna import ac_sweep

    config = _prepare(args)
    case = _entry(config, "circuit", "analyses", args.analysis, "analysis")
    if case["kind"] != "ac":
        raise ConfigError(f"analysis {args.analysis!r} has kind "
                          f"{case['kind']!r}; the ac command runs AC sweeps")
    netlist = build_netlist_from_config(config, case["netlist"])
    grid = build_frequency_grid(case["frequencies"])
    result = ac_sweep(netlist, grid, threads=args.threads)
    nodes = list(result.node_index)
    header = ["frequency_hz"]
    for n in nodes:
        header += [f"v_re_{n}", f"v_im_{n}"]

    def rows():
        for k, f in enumerate(grid):
            row = [float(f)]
            for n in nodes:
                v = result.voltages[k, result.node_index[n]]
                row += [float(np.real(v)), float(np.imag(v))]
            yield row

    out = os.path.join(args.out_dir, f"ac_{args.analysis}.csv")
    export.write_csv(out, header, rows())
    print(f"wrote {out} ({grid.size} frequencies, "
          f"kcl residual {result.kcl_residual:.2e})")
    return EXIT_OK


def _cmd_tf(args) -> int:
    from .circuit.twoport import cutoff_frequency

    config = _prepare(args)
    case = _entry(config, "circuit", "transfers", args.case, "transfer case")
    grid, results = _transfer_results(config, case)
    out = os.path.join(args.out_dir, f"transfer_{args.case}.csv")
    export.transfer_csv(out, grid, {c: r.h for c, r in results.items()})
    for cname, result in results.items():
        print(f"{cname}: cutoff {cutoff_frequency(result):.4e} Hz")
    print(f"wrote {out}")
    return EXIT_OK


def _cmd_etherm(args) -> int:
    from .circuit.etherm import electro_thermal_solve

    config = _prepare(args)
    case = _entry(config, "circuit", "etherm", args.case, "etherm case")
    netlist = build_netlist_from_config(config, case["netlist"])
    thermal = build_device_thermal_network(case["conductance_to_ambient"],
                                           case["ambient"])
    result, state = electro_thermal_solve(
        netlist, thermal, tolerance=case["tolerance"],
        max_iterations=case["max_iterations"],
        under_relaxation=case["under_relaxation"], ambient=case["ambient"])
    out = os.path.join(args.out_dir, f"etherm_{args.case}.csv")
    export.write_csv(out, ("device", "temperature_k", "power_w"),
                     ((d, state.device_temperatures[d], state.device_powers[d])
                      for d in state.device_temperatures))
    print(f"converged={state.converged} after {state.iterations} updates; "
          f"wrote {out}")
    return EXIT_OK


def _cmd_run(args) -> int:
    config = parse_config(args.config)
    if args.threads < 1:
        raise ConfigError("--threads must be >= 1")
    manifest = run_scenario(config, args.scenario, args.out_dir,
                            threads=args.threads)
    print(f"scenario {args.scenario!r}: {len(manifest.outputs)} outputs in "
          f"{args.out_dir}")
    for rel in manifest.outputs:
        print(f"  {rel}")
    return EXIT_OK


_COMMANDS = {
    "extract-z": _cmd_extract_z,
    "extract-c": _cmd_extract_c,
    "coupling-sweep": _cmd_coupling,
    "thermal": _cmd_thermal,
    "reduce": _cmd_reduce,
    "ac": _cmd_ac,
    "tf": _cmd_tf,
    "etherm": _cmd_etherm,
    "run": _cmd_run,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except IOError_ as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except VialabError as exc:                 # residual tool errors
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
