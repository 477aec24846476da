"""Strict JSON project configuration.

A project config is one JSON document with named materials, cross-sections,
via models, stacks, analysis cases, and scenarios.  Validation is strict:
unknown keys are rejected, every name reference must resolve, and quantities
given as strings ("10um", "2.5 GHz") are converted to SI on parse.  The
normalized form serializes back to JSON; parse -> serialize -> parse is
idempotent.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import ConfigError, IOError_
from .geometry import CrossSection, CrossSectionMask, build_cross_section, subdivide_quadrants
from .materials import Material, material_library
from .stack import DeviceSite, Layer, StackModel, assemble_stack
from .units import parse_quantity
from .via import ViaGeometry, via_detail_model

_SCENARIO_KINDS = (
    "resistance_sweep",
    "capacitance_refinement",
    "coupling_sweep",
    "hotspot_study",
    "transfer_comparison",
    "thermal_reduction",
    "etherm",
)

_FACES = ("x-", "x+", "y-", "y+", "z-", "z+")


class _Ctx:
    """Validation context: keeps the raw source for best-effort line hints."""

    def __init__(self, source: str = ""):
        self.source = source

    def fail(self, path: str, message: str, token: str | None = None):
        where = path
        if token is not None and self.source:
            for ln, line in enumerate(self.source.splitlines(), 1):
                if token in line:
                    where = f"{path} (line {ln})"
                    break
        raise ConfigError(f"{where}: {message}")


# ---------------------------------------------------------------------------
# validation primitives

def _object(ctx: _Ctx, value, path: str) -> dict:
    if not isinstance(value, dict):
        ctx.fail(path, f"expected an object, got {type(value).__name__}")
    return value


def _check_keys(ctx: _Ctx, obj: dict, path: str, required=(), optional=()):
    allowed = set(required) | set(optional)
    for key in obj:
        if key not in allowed:
            ctx.fail(f"{path}.{key}", "unknown key", token=f'"{key}"')
    for key in required:
        if key not in obj:
            ctx.fail(path, f"missing required key {key!r}")


def _string(ctx: _Ctx, value, path: str) -> str:
    if not isinstance(value, str) or not value:
        ctx.fail(path, "expected a non-empty string")
    return value


def _boolean(ctx: _Ctx, value, path: str) -> bool:
    if not isinstance(value, bool):
        ctx.fail(path, "expected a boolean")
    return value


def _integer(ctx: _Ctx, value, path: str, minimum: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        ctx.fail(path, "expected an integer")
    if minimum is not None and value < minimum:
        ctx.fail(path, f"must be >= {minimum}")
    return value


def _number(ctx: _Ctx, value, path: str, minimum: float | None = None,
            exclusive: bool = False) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        ctx.fail(path, "expected a number")
    v = float(value)
    if minimum is not None and (v <= minimum if exclusive else v < minimum):
        ctx.fail(path, f"must be {'>' if exclusive else '>='} {minimum}")
    return v


def _quantity(ctx: _Ctx, value, path: str, expect: str | None = None,
              positive: bool = False) -> float:
    v = parse_quantity(value, expect=expect, where=path)
    if positive and v <= 0:
        ctx.fail(path, "must be > 0")
    return v


def _array(ctx: _Ctx, value, path: str, min_len: int = 0) -> list:
    if not isinstance(value, list):
        ctx.fail(path, f"expected an array, got {type(value).__name__}")
    if len(value) < min_len:
        ctx.fail(path, f"needs at least {min_len} entr{'y' if min_len == 1 else 'ies'}")
    return value


def _reference(ctx: _Ctx, name, path: str, table: dict, what: str) -> str:
    name = _string(ctx, name, path)
    if name not in table:
        known = ", ".join(sorted(table)) or "none defined"
        ctx.fail(path, f"unknown {what} {name!r} (known: {known})", token=f'"{name}"')
    return name


# ---------------------------------------------------------------------------
# frequency grids

def _norm_freq_grid(ctx: _Ctx, value, path: str) -> Any:
    """Normalize a frequency grid: explicit list or log/linear range."""
    if isinstance(value, list):
        grid = [_quantity(ctx, v, f"{path}[{i}]", expect="frequency")
                for i, v in enumerate(_array(ctx, value, path, min_len=2))]
        if any(b <= a for a, b in zip(grid, grid[1:])):
            ctx.fail(path, "frequencies must be strictly increasing")
        if grid[0] < 0:
            ctx.fail(path, "frequencies must be >= 0")
        return grid
    obj = _object(ctx, value, path)
    _check_keys(ctx, obj, path, required=("start", "stop", "points"),
                optional=("kind", "include_dc"))
    kind = obj.get("kind", "log")
    if kind not in ("log", "linear"):
        ctx.fail(f"{path}.kind", "expected 'log' or 'linear'")
    start = _quantity(ctx, obj["start"], f"{path}.start", expect="frequency", positive=True)
    stop = _quantity(ctx, obj["stop"], f"{path}.stop", expect="frequency", positive=True)
    if stop <= start:
        ctx.fail(f"{path}.stop", "must be greater than start")
    points = _integer(ctx, obj["points"], f"{path}.points", minimum=2)
    include_dc = _boolean(ctx, obj.get("include_dc", False),
                          f"{path}.include_dc") if "include_dc" in obj else False
    return {"kind": kind, "start": start, "stop": stop,
            "points": points, "include_dc": include_dc}


def build_frequency_grid(spec) -> np.ndarray:
    """Materialize a normalized frequency grid as an array."""
    if isinstance(spec, list):
        return np.asarray(spec, dtype=float)
    if spec["kind"] == "log":
        grid = np.geomspace(spec["start"], spec["stop"], spec["points"])
    else:
        grid = np.linspace(spec["start"], spec["stop"], spec["points"])
    if spec["include_dc"]:
        grid = np.concatenate(([0.0], grid))
    return grid


# ---------------------------------------------------------------------------
# section normalizers

def _norm_materials(ctx: _Ctx, sec, path: str) -> dict:
    out = {}
    for name, entry in _object(ctx, sec, path).items():
        p = f"{path}.{name}"
        obj = _object(ctx, entry, p)
        _check_keys(ctx, obj, p,
                    required=("electrical_conductivity", "relative_permittivity",
                              "thermal_conductivity", "volumetric_heat_capacity"))
        out[name] = {
            "electrical_conductivity": _number(ctx, obj["electrical_conductivity"],
                                               f"{p}.electrical_conductivity", 0.0),
            "relative_permittivity": _number(ctx, obj["relative_permittivity"],
                                             f"{p}.relative_permittivity", 0.0, True),
            "thermal_conductivity": _number(ctx, obj["thermal_conductivity"],
                                            f"{p}.thermal_conductivity", 0.0, True),
            "volumetric_heat_capacity": _number(ctx, obj["volumetric_heat_capacity"],
                                                f"{p}.volumetric_heat_capacity", 0.0, True),
        }
    return out


def _norm_cross_sections(ctx: _Ctx, sec, path: str) -> dict:
    out = {}
    for name, entry in _object(ctx, sec, path).items():
        p = f"{path}.{name}"
        obj = _object(ctx, entry, p)
        kind = _string(ctx, obj.get("kind", ""), f"{p}.kind")
        if kind == "circle":
            _check_keys(ctx, obj, p, required=("kind", "diameter"), optional=("cell_size",))
            norm = {"kind": kind,
                    "diameter": _quantity(ctx, obj["diameter"], f"{p}.diameter",
                                          "length", positive=True)}
        elif kind == "rectangle":
            _check_keys(ctx, obj, p, required=("kind", "width", "height"),
                        optional=("cell_size",))
            norm = {"kind": kind,
                    "width": _quantity(ctx, obj["width"], f"{p}.width", "length", True),
                    "height": _quantity(ctx, obj["height"], f"{p}.height", "length", True)}
        elif kind == "square_tube":
            _check_keys(ctx, obj, p, required=("kind", "outer", "wall"),
                        optional=("cell_size",))
            norm = {"kind": kind,
                    "outer": _quantity(ctx, obj["outer"], f"{p}.outer", "length", True),
                    "wall": _quantity(ctx, obj["wall"], f"{p}.wall", "length", True)}
        elif kind == "subdivided":
            _check_keys(ctx, obj, p, required=("kind", "base", "spacing"),
                        optional=("cell_size",))
            norm = {"kind": kind, "base": _string(ctx, obj["base"], f"{p}.base"),
                    "spacing": _quantity(ctx, obj["spacing"], f"{p}.spacing",
                                         "length", True)}
        else:
            ctx.fail(f"{p}.kind", "expected one of circle, rectangle, "
                                  "square_tube, subdivided")
        if "cell_size" in obj:
            norm["cell_size"] = _quantity(ctx, obj["cell_size"], f"{p}.cell_size",
                                          "length", positive=True)
        out[name] = norm
    for name, norm in out.items():
        if norm["kind"] == "subdivided":
            base = norm["base"]
            if base not in out:
                ctx.fail(f"{path}.{name}.base", f"unknown cross-section {base!r}",
                         token=f'"{base}"')
            if out[base]["kind"] == "subdivided":
                ctx.fail(f"{path}.{name}.base", "base may not itself be subdivided")
    return out


def _norm_vias(ctx: _Ctx, sec, path: str, materials: dict) -> dict:
    out = {}
    for name, entry in _object(ctx, sec, path).items():
        p = f"{path}.{name}"
        obj = _object(ctx, entry, p)
        _check_keys(ctx, obj, p,
                    required=("level", "diameter", "length", "material",
                              "connection_thickness", "connection_material",
                              "metallization_thickness", "metallization_material"),
                    optional=("bottom_diameter", "body_segments",
                              "metallization_sublayers", "metallization_materials"))
        norm = {
            "level": _integer(ctx, obj["level"], f"{p}.level", minimum=1),
            "diameter": _quantity(ctx, obj["diameter"], f"{p}.diameter", "length", True),
            "length": _quantity(ctx, obj["length"], f"{p}.length", "length", True),
            "material": _reference(ctx, obj["material"], f"{p}.material",
                                   materials, "material"),
            "connection_thickness": _quantity(ctx, obj["connection_thickness"],
                                              f"{p}.connection_thickness", "length", True),
            "connection_material": _reference(ctx, obj["connection_material"],
                                              f"{p}.connection_material",
                                              materials, "material"),
            "metallization_thickness": _quantity(ctx, obj["metallization_thickness"],
                                                 f"{p}.metallization_thickness",
                                                 "length", True),
            "metallization_material": _reference(ctx, obj["metallization_material"],
                                                 f"{p}.metallization_material",
                                                 materials, "material"),
        }
        if norm["level"] > 3:
            ctx.fail(f"{p}.level", "detail level must be 1, 2, or 3")
        if "bottom_diameter" in obj:
            norm["bottom_diameter"] = _quantity(ctx, obj["bottom_diameter"],
                                                f"{p}.bottom_diameter", "length", True)
        if "body_segments" in obj:
            norm["body_segments"] = _integer(ctx, obj["body_segments"],
                                             f"{p}.body_segments", minimum=2)
        if "metallization_sublayers" in obj:
            norm["metallization_sublayers"] = _integer(
                ctx, obj["metallization_sublayers"],
                f"{p}.metallization_sublayers", minimum=3)
        if "metallization_materials" in obj:
            norm["metallization_materials"] = [
                _reference(ctx, m, f"{p}.metallization_materials[{i}]",
                           materials, "material")
                for i, m in enumerate(_array(ctx, obj["metallization_materials"],
                                             f"{p}.metallization_materials", 1))]
        out[name] = norm
    return out


def _norm_stacks(ctx: _Ctx, sec, path: str, materials: dict) -> dict:
    out = {}
    for name, entry in _object(ctx, sec, path).items():
        p = f"{path}.{name}"
        obj = _object(ctx, entry, p)
        _check_keys(ctx, obj, p, required=("layers",), optional=("devices",))
        layers = []
        for i, lay in enumerate(_array(ctx, obj["layers"], f"{p}.layers", 1)):
            lp = f"{p}.layers[{i}]"
            lobj = _object(ctx, lay, lp)
            _check_keys(ctx, lobj, lp,
                        required=("thickness", "extent_x", "extent_y", "material"))
            layers.append({
                "thickness": _quantity(ctx, lobj["thickness"], f"{lp}.thickness",
                                       "length", True),
                "extent_x": _quantity(ctx, lobj["extent_x"], f"{lp}.extent_x",
                                      "length", True),
                "extent_y": _quantity(ctx, lobj["extent_y"], f"{lp}.extent_y",
                                      "length", True),
                "material": _reference(ctx, lobj["material"], f"{lp}.material",
                                       materials, "material"),
            })
        devices = []
        for i, dev in enumerate(_array(ctx, obj.get("devices", []), f"{p}.devices")):
            dp = f"{p}.devices[{i}]"
            dobj = _object(ctx, dev, dp)
            _check_keys(ctx, dobj, dp, required=("layer", "x", "y", "w", "h"))
            layer = _integer(ctx, dobj["layer"], f"{dp}.layer", minimum=0)
            if layer >= len(layers):
                ctx.fail(f"{dp}.layer", f"layer {layer} out of range "
                                        f"(stack has {len(layers)})")
            devices.append({
                "layer": layer,
                "x": _quantity(ctx, dobj["x"], f"{dp}.x", "length"),
                "y": _quantity(ctx, dobj["y"], f"{dp}.y", "length"),
                "w": _quantity(ctx, dobj["w"], f"{dp}.w", "length", True),
                "h": _quantity(ctx, dobj["h"], f"{dp}.h", "length", True),
            })
        out[name] = {"layers": layers, "devices": devices}
    return out


def _norm_em(ctx: _Ctx, sec, path: str, materials: dict, sections: dict) -> dict:
    obj = _object(ctx, sec, path)
    _check_keys(ctx, obj, path, optional=("sweeps", "capacitance", "coupling"))
    out: dict = {"sweeps": {}, "capacitance": {}, "coupling": {}}

    for name, entry in _object(ctx, obj.get("sweeps", {}), f"{path}.sweeps").items():
        p = f"{path}.sweeps.{name}"
        e = _object(ctx, entry, p)
        _check_keys(ctx, e, p, required=("cross_section", "material", "frequencies"),
                    optional=("currents",))
        norm = {
            "cross_section": _reference(ctx, e["cross_section"], f"{p}.cross_section",
                                        sections, "cross-section"),
            "material": _reference(ctx, e["material"], f"{p}.material",
                                   materials, "material"),
            "frequencies": _norm_freq_grid(ctx, e["frequencies"], f"{p}.frequencies"),
        }
        if "currents" in e:
            norm["currents"] = [
                _number(ctx, c, f"{p}.currents[{i}]")
                for i, c in enumerate(_array(ctx, e["currents"], f"{p}.currents", 1))]
        out["sweeps"][name] = norm

    for name, entry in _object(ctx, obj.get("capacitance", {}),
                               f"{path}.capacitance").items():
        p = f"{path}.capacitance.{name}"
        e = _object(ctx, entry, p)
        _check_keys(ctx, e, p, required=("radius", "distance", "dielectric"),
                    optional=("refinement_steps", "nodes", "box_factor"))
        out["capacitance"][name] = {
            "radius": _quantity(ctx, e["radius"], f"{p}.radius", "length", True),
            "distance": _quantity(ctx, e["distance"], f"{p}.distance", "length", True),
            "dielectric": _reference(ctx, e["dielectric"], f"{p}.dielectric",
                                     materials, "material"),
            "refinement_steps": _integer(ctx, e.get("refinement_steps", 3),
                                         f"{p}.refinement_steps", minimum=1),
            "nodes": (_integer(ctx, e["nodes"], f"{p}.nodes", minimum=11)
                      if e.get("nodes") is not None else None),
            "box_factor": (_number(ctx, e["box_factor"], f"{p}.box_factor", 2.0)
                           if "box_factor" in e else 20.0),
        }

    for name, entry in _object(ctx, obj.get("coupling", {}),
                               f"{path}.coupling").items():
        p = f"{path}.coupling.{name}"
        e = _object(ctx, entry, p)
        _check_keys(ctx, e, p,
                    required=("radius", "distances", "substrate", "conductor"),
                    optional=("frequency", "cell_size"))
        distances = [_quantity(ctx, d, f"{p}.distances[{i}]", "length", True)
                     for i, d in enumerate(_array(ctx, e["distances"],
                                                  f"{p}.distances", 1))]
        out["coupling"][name] = {
            "radius": _quantity(ctx, e["radius"], f"{p}.radius", "length", True),
            "distances": distances,
            "substrate": _reference(ctx, e["substrate"], f"{p}.substrate",
                                    materials, "material"),
            "conductor": _reference(ctx, e["conductor"], f"{p}.conductor",
                                    materials, "material"),
            "frequency": _quantity(ctx, e.get("frequency", 1e9), f"{p}.frequency",
                                   "frequency", True),
            "cell_size": (_quantity(ctx, e["cell_size"], f"{p}.cell_size",
                                    "length", True)
                          if e.get("cell_size") is not None else None),
        }
    return out


def _norm_boundaries(ctx: _Ctx, value, path: str) -> dict:
    out = {}
    obj = _object(ctx, value, path)
    for face, entry in obj.items():
        if face not in _FACES:
            ctx.fail(f"{path}.{face}", f"unknown face (expected one of {', '.join(_FACES)})")
        p = f"{path}.{face}"
        e = _object(ctx, entry, p)
        kind = _string(ctx, e.get("kind", ""), f"{p}.kind")
        if kind == "fixed":
            _check_keys(ctx, e, p, required=("kind", "temperature"))
            out[face] = {"kind": "fixed",
                         "temperature": _quantity(ctx, e["temperature"],
                                                  f"{p}.temperature", "temperature", True)}
        elif kind == "adiabatic":
            _check_keys(ctx, e, p, required=("kind",))
            out[face] = {"kind": "adiabatic"}
        elif kind == "convective":
            _check_keys(ctx, e, p, required=("kind", "film_coefficient", "ambient"))
            out[face] = {"kind": "convective",
                         "film_coefficient": _number(ctx, e["film_coefficient"],
                                                     f"{p}.film_coefficient", 0.0, True),
                         "ambient": _quantity(ctx, e["ambient"], f"{p}.ambient",
                                              "temperature", True)}
        else:
            ctx.fail(f"{p}.kind", "expected one of fixed, adiabatic, convective")
    return out


def _norm_pitch(ctx: _Ctx, value, path: str) -> list:
    arr = _array(ctx, value, path, min_len=3)
    if len(arr) != 3:
        ctx.fail(path, "pitch needs exactly 3 entries (px, py, pz)")
    return [_quantity(ctx, v, f"{path}[{i}]", "length", True)
            for i, v in enumerate(arr)]


def _norm_thermal(ctx: _Ctx, sec, path: str, stacks: dict, vias: dict) -> dict:
    obj = _object(ctx, sec, path)
    _check_keys(ctx, obj, path, optional=("studies",))
    out: dict = {"studies": {}}
    for name, entry in _object(ctx, obj.get("studies", {}), f"{path}.studies").items():
        p = f"{path}.studies.{name}"
        e = _object(ctx, entry, p)
        _check_keys(ctx, e, p, required=("stack", "pitch", "device_power"),
                    optional=("budget", "boundaries", "variants"))
        stack = _reference(ctx, e["stack"], f"{p}.stack", stacks, "stack")
        power = e["device_power"]
        n_dev = len(stacks[stack]["devices"])
        if isinstance(power, list):
            power = [_quantity(ctx, w, f"{p}.device_power[{i}]", "power")
                     for i, w in enumerate(power)]
            if len(power) != n_dev:
                ctx.fail(f"{p}.device_power",
                         f"stack {stack!r} has {n_dev} devices, got {len(power)} powers")
        else:
            power = _quantity(ctx, power, f"{p}.device_power", "power")
        variants = {}
        for vname, ventry in _object(ctx, e.get("variants", {"baseline": {}}),
                                     f"{p}.variants").items():
            vp = f"{p}.variants.{vname}"
            v = _object(ctx, ventry, vp)
            _check_keys(ctx, v, vp, optional=("rotations", "via", "via_positions"))
            rotations = []
            for i, r in enumerate(_array(ctx, v.get("rotations", []),
                                         f"{vp}.rotations")):
                rp = f"{vp}.rotations[{i}]"
                robj = _object(ctx, r, rp)
                _check_keys(ctx, robj, rp, required=("layer", "quarter_turns"))
                rotations.append({
                    "layer": _integer(ctx, robj["layer"], f"{rp}.layer", minimum=0),
                    "quarter_turns": _integer(ctx, robj["quarter_turns"],
                                              f"{rp}.quarter_turns"),
                })
            positions = []
            for i, xy in enumerate(_array(ctx, v.get("via_positions", []),
                                          f"{vp}.via_positions")):
                pp = f"{vp}.via_positions[{i}]"
                pair = _array(ctx, xy, pp, min_len=2)
                if len(pair) != 2:
                    ctx.fail(pp, "expected an [x, y] pair")
                positions.append([_quantity(ctx, pair[0], f"{pp}[0]", "length"),
                                  _quantity(ctx, pair[1], f"{pp}[1]", "length")])
            if positions and v.get("via") is None:
                ctx.fail(vp, "via_positions given without a via model")
            variants[vname] = {
                "rotations": rotations,
                "via": (_reference(ctx, v["via"], f"{vp}.via", vias, "via")
                        if v.get("via") is not None else None),
                "via_positions": positions,
            }
        out["studies"][name] = {
            "stack": stack,
            "pitch": _norm_pitch(ctx, e["pitch"], f"{p}.pitch"),
            "device_power": power,
            "budget": _integer(ctx, e.get("budget", 500_000), f"{p}.budget", 1),
            "boundaries": _norm_boundaries(ctx, e["boundaries"], f"{p}.boundaries")
                          if e.get("boundaries") is not None else None,
            "variants": variants,
        }
    return out


def _norm_mor(ctx: _Ctx, sec, path: str, stacks: dict) -> dict:
    obj = _object(ctx, sec, path)
    _check_keys(ctx, obj, path, optional=("reductions",))
    out: dict = {"reductions": {}}
    for name, entry in _object(ctx, obj.get("reductions", {}),
                               f"{path}.reductions").items():
        p = f"{path}.reductions.{name}"
        e = _object(ctx, entry, p)
        _check_keys(ctx, e, p, required=("stack", "pitch", "order", "stimulus"),
                    optional=("budget", "freq_grid"))
        stack = _reference(ctx, e["stack"], f"{p}.stack", stacks, "stack")
        if not stacks[stack]["devices"]:
            ctx.fail(f"{p}.stack", f"stack {stack!r} has no devices to use as ports")
        sp = f"{p}.stimulus"
        s = _object(ctx, e["stimulus"], sp)
        _check_keys(ctx, s, sp, required=("kind", "duration", "dt"),
                    optional=("amplitudes", "frequencies"))
        kind = _string(ctx, s["kind"], f"{sp}.kind")
        if kind not in ("step", "sine"):
            ctx.fail(f"{sp}.kind", "expected 'step' or 'sine'")
        stim = {"kind": kind,
                "duration": _quantity(ctx, s["duration"], f"{sp}.duration", "time", True),
                "dt": _quantity(ctx, s["dt"], f"{sp}.dt", "time", True)}
        if "amplitudes" in s:
            stim["amplitudes"] = [
                _number(ctx, a, f"{sp}.amplitudes[{i}]")
                for i, a in enumerate(_array(ctx, s["amplitudes"],
                                             f"{sp}.amplitudes", 1))]
        if "frequencies" in s:
            stim["frequencies"] = [
                _quantity(ctx, f, f"{sp}.frequencies[{i}]", "frequency", True)
                for i, f in enumerate(_array(ctx, s["frequencies"],
                                             f"{sp}.frequencies", 1))]
        out["reductions"][name] = {
            "stack": stack,
            "pitch": _norm_pitch(ctx, e["pitch"], f"{p}.pitch"),
            "order": _integer(ctx, e["order"], f"{p}.order", minimum=1),
            "budget": _integer(ctx, e.get("budget", 500_000), f"{p}.budget", 1),
            "stimulus": stim,
            "freq_grid": (_norm_freq_grid(ctx, e["freq_grid"], f"{p}.freq_grid")
                          if e.get("freq_grid") is not None else None),
        }
    return out


def _norm_line(ctx: _Ctx, value, path: str) -> dict:
    obj = _object(ctx, value, path)
    _check_keys(ctx, obj, path,
                required=("rpul", "lpul", "gpul", "cpul", "length"))
    return {
        "rpul": _number(ctx, obj["rpul"], f"{path}.rpul", 0.0),
        "lpul": _number(ctx, obj["lpul"], f"{path}.lpul", 0.0),
        "gpul": _number(ctx, obj["gpul"], f"{path}.gpul", 0.0),
        "cpul": _number(ctx, obj["cpul"], f"{path}.cpul", 0.0),
        "length": _quantity(ctx, obj["length"], f"{path}.length", "length"),
    }


def _norm_circuit(ctx: _Ctx, sec, path: str) -> dict:
    obj = _object(ctx, sec, path)
    _check_keys(ctx, obj, path,
                optional=("netlists", "analyses", "transfers", "etherm"))
    out: dict = {"netlists": {}, "analyses": {}, "transfers": {}, "etherm": {}}

    for name, entry in _object(ctx, obj.get("netlists", {}),
                               f"{path}.netlists").items():
        p = f"{path}.netlists.{name}"
        e = _object(ctx, entry, p)
        if ("file" in e) == ("text" in e):
            ctx.fail(p, "exactly one of 'file' or 'text' is required")
        _check_keys(ctx, e, p, optional=("file", "text"))
        out["netlists"][name] = ({"file": _string(ctx, e["file"], f"{p}.file")}
                                 if "file" in e
                                 else {"text": _string(ctx, e["text"], f"{p}.text")})

    for name, entry in _object(ctx, obj.get("analyses", {}),
                               f"{path}.analyses").items():
        p = f"{path}.analyses.{name}"
        e = _object(ctx, entry, p)
        _check_keys(ctx, e, p, required=("netlist", "kind"),
                    optional=("frequencies", "dt", "t_end"))
        kind = _string(ctx, e["kind"], f"{p}.kind")
        if kind not in ("dc", "ac", "transient"):
            ctx.fail(f"{p}.kind", "expected one of dc, ac, transient")
        norm = {"netlist": _reference(ctx, e["netlist"], f"{p}.netlist",
                                      out["netlists"], "netlist"),
                "kind": kind}
        if kind == "ac":
            if "frequencies" not in e:
                ctx.fail(p, "ac analysis requires 'frequencies'")
            norm["frequencies"] = _norm_freq_grid(ctx, e["frequencies"],
                                                  f"{p}.frequencies")
        if kind == "transient":
            for key in ("dt", "t_end"):
                if key not in e:
                    ctx.fail(p, f"transient analysis requires {key!r}")
            norm["dt"] = _quantity(ctx, e["dt"], f"{p}.dt", "time", True)
            norm["t_end"] = _quantity(ctx, e["t_end"], f"{p}.t_end", "time", True)
        out["analyses"][name] = norm

    for name, entry in _object(ctx, obj.get("transfers", {}),
                               f"{path}.transfers").items():
        p = f"{path}.transfers.{name}"
        e = _object(ctx, entry, p)
        _check_keys(ctx, e, p,
                    required=("source_resistance", "load_resistance", "line1",
                              "connections", "frequencies"),
                    optional=("line2",))
        connections = {}
        for cname, centry in _object(ctx, e["connections"],
                                     f"{p}.connections").items():
            cp = f"{p}.connections.{cname}"
            c = _object(ctx, centry, cp)
            ckind = _string(ctx, c.get("kind", ""), f"{cp}.kind")
            if ckind == "short":
                _check_keys(ctx, c, cp, required=("kind",))
                connections[cname] = {"kind": "short"}
            elif ckind == "fixed":
                _check_keys(ctx, c, cp, required=("kind", "ohms"))
                connections[cname] = {"kind": "fixed",
                                      "ohms": _quantity(ctx, c["ohms"], f"{cp}.ohms",
                                                        "resistance", True)}
            elif ckind == "table":
                _check_keys(ctx, c, cp, required=("kind", "frequencies", "ohms"),
                            optional=("clamp",))
                fs = [_quantity(ctx, f, f"{cp}.frequencies[{i}]", "frequency")
                      for i, f in enumerate(_array(ctx, c["frequencies"],
                                                   f"{cp}.frequencies", 2))]
                ohms = [_quantity(ctx, r, f"{cp}.ohms[{i}]", "resistance", True)
                        for i, r in enumerate(_array(ctx, c["ohms"],
                                                     f"{cp}.ohms", 2))]
                if len(fs) != len(ohms):
                    ctx.fail(cp, "frequencies and ohms need the same length")
                connections[cname] = {"kind": "table", "frequencies": fs,
                                      "ohms": ohms,
                                      "clamp": _boolean(ctx, c.get("clamp", True),
                                                        f"{cp}.clamp")}
            else:
                ctx.fail(f"{cp}.kind", "expected one of short, fixed, table")
        if not connections:
            ctx.fail(f"{p}.connections", "needs at least one connection")
        out["transfers"][name] = {
            "source_resistance": _quantity(ctx, e["source_resistance"],
                                           f"{p}.source_resistance", "resistance"),
            "load_resistance": _quantity(ctx, e["load_resistance"],
                                         f"{p}.load_resistance", "resistance", True),
            "line1": _norm_line(ctx, e["line1"], f"{p}.line1"),
            "line2": (_norm_line(ctx, e["line2"], f"{p}.line2")
                      if e.get("line2") is not None else None),
            "connections": connections,
            "frequencies": _norm_freq_grid(ctx, e["frequencies"], f"{p}.frequencies"),
        }

    for name, entry in _object(ctx, obj.get("etherm", {}), f"{path}.etherm").items():
        p = f"{path}.etherm.{name}"
        e = _object(ctx, entry, p)
        _check_keys(ctx, e, p, required=("netlist", "conductance_to_ambient"),
                    optional=("ambient", "tolerance", "max_iterations",
                              "under_relaxation"))
        cond = {}
        for dev, g in _object(ctx, e["conductance_to_ambient"],
                              f"{p}.conductance_to_ambient").items():
            cond[dev] = _number(ctx, g, f"{p}.conductance_to_ambient.{dev}",
                                0.0, True)
        if not cond:
            ctx.fail(f"{p}.conductance_to_ambient", "needs at least one device")
        out["etherm"][name] = {
            "netlist": _reference(ctx, e["netlist"], f"{p}.netlist",
                                  out["netlists"], "netlist"),
            "conductance_to_ambient": cond,
            "ambient": _quantity(ctx, e.get("ambient", 300.0), f"{p}.ambient",
                                 "temperature", True),
            "tolerance": _number(ctx, e.get("tolerance", 1e-3), f"{p}.tolerance",
                                 0.0, True),
            "max_iterations": _integer(ctx, e.get("max_iterations", 50),
                                       f"{p}.max_iterations", minimum=1),
            "under_relaxation": _number(ctx, e.get("under_relaxation", 1.0),
                                        f"{p}.under_relaxation", 0.0, True),
        }
    return out


def _norm_scenarios(ctx: _Ctx, sec, path: str, data: dict) -> dict:
    out = {}
    for name, entry in _object(ctx, sec, path).items():
        p = f"{path}.{name}"
        e = _object(ctx, entry, p)
        kind = _string(ctx, e.get("kind", ""), f"{p}.kind")
        if kind == "resistance_sweep":
            _check_keys(ctx, e, p, required=("kind", "sweeps"), optional=("title",))
            sweeps = [_reference(ctx, s, f"{p}.sweeps[{i}]",
                                 data["em"]["sweeps"], "em sweep")
                      for i, s in enumerate(_array(ctx, e["sweeps"],
                                                   f"{p}.sweeps", 1))]
            norm = {"kind": kind, "sweeps": sweeps,
                    "title": e.get("title", name)}
        elif kind == "capacitance_refinement":
            _check_keys(ctx, e, p, required=("kind", "case"), optional=("title",))
            norm = {"kind": kind,
                    "case": _reference(ctx, e["case"], f"{p}.case",
                                       data["em"]["capacitance"], "capacitance case"),
                    "title": e.get("title", name)}
        elif kind == "coupling_sweep":
            _check_keys(ctx, e, p, required=("kind", "case"),
                        optional=("title", "export_subcircuits", "subcircuit_length"))
            norm = {"kind": kind,
                    "case": _reference(ctx, e["case"], f"{p}.case",
                                       data["em"]["coupling"], "coupling case"),
                    "title": e.get("title", name),
                    "export_subcircuits": _boolean(
                        ctx, e.get("export_subcircuits", False),
                        f"{p}.export_subcircuits"),
                    "subcircuit_length": _quantity(
                        ctx, e.get("subcircuit_length", 1.0),
                        f"{p}.subcircuit_length", "length", True)}
        elif kind == "hotspot_study":
            _check_keys(ctx, e, p, required=("kind", "study"),
                        optional=("title", "write_fields"))
            norm = {"kind": kind,
                    "study": _reference(ctx, e["study"], f"{p}.study",
                                        data["thermal"]["studies"], "thermal study"),
                    "title": e.get("title", name),
                    "write_fields": _boolean(ctx, e.get("write_fields", False),
                                             f"{p}.write_fields")}
        elif kind == "transfer_comparison":
            _check_keys(ctx, e, p, required=("kind", "case"), optional=("title",))
            norm = {"kind": kind,
                    "case": _reference(ctx, e["case"], f"{p}.case",
                                       data["circuit"]["transfers"], "transfer case"),
                    "title": e.get("title", name)}
        elif kind == "thermal_reduction":
            _check_keys(ctx, e, p, required=("kind", "case"),
                        optional=("title", "export_subcircuit"))
            norm = {"kind": kind,
                    "case": _reference(ctx, e["case"], f"{p}.case",
                                       data["mor"]["reductions"], "reduction case"),
                    "title": e.get("title", name),
                    "export_subcircuit": _boolean(
                        ctx, e.get("export_subcircuit", True),
                        f"{p}.export_subcircuit")}
        elif kind == "etherm":
            _check_keys(ctx, e, p, required=("kind", "case"), optional=("title",))
            norm = {"kind": kind,
                    "case": _reference(ctx, e["case"], f"{p}.case",
                                       data["circuit"]["etherm"], "etherm case"),
                    "title": e.get("title", name)}
        else:
            ctx.fail(f"{p}.kind",
                     f"expected one of {', '.join(_SCENARIO_KINDS)}")
        if "title" in norm:
            norm["title"] = _string(ctx, norm["title"], f"{p}.title")
        out[name] = norm
    return out


# ---------------------------------------------------------------------------
# the config object

@dataclass(frozen=True)
class ProjectConfig:
    """Normalized project configuration (all quantities in SI units)."""

    data: dict
    base_dir: str = field(default=".", compare=False)

    # -- serialization ------------------------------------------------------
    def to_text(self) -> str:
        """Canonical JSON form; parsing it again reproduces this config."""
        return json.dumps(self.data, indent=2, sort_keys=True) + "\n"

    def sha256(self) -> str:
        """Hash of the canonical serialization (not of the source file)."""
        return hashlib.sha256(self.to_text().encode()).hexdigest()

    # -- name tables --------------------------------------------------------
    def material_table(self) -> dict:
        declared = {name: Material(name, **props)
                    for name, props in self.data["materials"].items()}
        return material_library(declared)

    def material(self, name: str) -> Material:
        table = self.material_table()
        if name not in table:
            raise ConfigError(f"unknown material {name!r} "
                              f"(known: {', '.join(sorted(table))})")
        return table[name]

    def scenario_names(self) -> tuple:
        return tuple(self.data["scenarios"])

    def scenario(self, name: str) -> dict:
        try:
            return self.data["scenarios"][name]
        except KeyError:
            known = ", ".join(sorted(self.data["scenarios"])) or "none defined"
            raise ConfigError(f"unknown scenario {name!r} (known: {known})") from None

    def _entry(self, section: str, sub: str, name: str, what: str) -> dict:
        table = self.data[section][sub]
        if name not in table:
            known = ", ".join(sorted(table)) or "none defined"
            raise ConfigError(f"unknown {what} {name!r} (known: {known})")
        return table[name]

    # -- geometry builders --------------------------------------------------
    def _section_spec(self, name: str) -> dict:
        table = self.data["cross_sections"]
        if name not in table:
            raise ConfigError(f"unknown cross-section {name!r} "
                              f"(known: {', '.join(sorted(table)) or 'none defined'})")
        return table[name]

    def build_mask(self, name: str) -> CrossSectionMask:
        """Rasterize a named cross-section (resolving subdivision)."""
        spec = self._section_spec(name)
        base = self._section_spec(spec["base"]) if spec["kind"] == "subdivided" else spec
        if base["kind"] == "circle":
            section = CrossSection.circle(base["diameter"] / 2)
            default_cell = base["diameter"] / 40
        elif base["kind"] == "rectangle":
            section = CrossSection.rectangle(base["width"], base["height"])
            default_cell = min(base["width"], base["height"]) / 20
        else:
            section = CrossSection.square_tube(base["outer"], base["wall"])
            default_cell = base["wall"] / 4
        cell = spec.get("cell_size") or base.get("cell_size") or default_cell
        mask = build_cross_section(section, cell)
        if spec["kind"] == "subdivided":
            mask = subdivide_quadrants(mask, spec["spacing"])
        return mask

    def build_via(self, name: str) -> ViaGeometry:
        if name not in self.data["vias"]:
            raise ConfigError(f"unknown via {name!r} (known: "
                              f"{', '.join(sorted(self.data['vias'])) or 'none defined'})")
        spec = dict(self.data["vias"][name])
        table = self.material_table()
        level = spec.pop("level")
        for key in ("material", "connection_material", "metallization_material"):
            spec[key] = table[spec[key]]
        if "metallization_materials" in spec:
            spec["metallization_materials"] = [table[m]
                                               for m in spec["metallization_materials"]]
        return via_detail_model(level, spec)

    def build_stack(self, name: str) -> StackModel:
        table = self.data["stacks"]
        if name not in table:
            raise ConfigError(f"unknown stack {name!r} "
                              f"(known: {', '.join(sorted(table)) or 'none defined'})")
        spec = table[name]
        materials = self.material_table()
        layers = [Layer(l["thickness"], l["extent_x"], l["extent_y"],
                        materials[l["material"]]) for l in spec["layers"]]
        devices = [DeviceSite(d["layer"], d["x"], d["y"], d["w"], d["h"])
                   for d in spec["devices"]]
        return assemble_stack(layers, (), {}, devices)


def _normalize(ctx: _Ctx, raw: dict) -> dict:
    top = _object(ctx, raw, "config")
    _check_keys(ctx, top, "config", optional=(
        "materials", "cross_sections", "vias", "stacks",
        "em", "thermal", "mor", "circuit", "scenarios"))

    data: dict = {}
    data["materials"] = _norm_materials(ctx, top.get("materials", {}), "materials")
    # resolvable material names: built-in library plus config-declared ones
    material_names = dict.fromkeys(list(material_library()) + list(data["materials"]))
    data["cross_sections"] = _norm_cross_sections(ctx, top.get("cross_sections", {}),
                                                  "cross_sections")
    data["vias"] = _norm_vias(ctx, top.get("vias", {}), "vias", material_names)
    data["stacks"] = _norm_stacks(ctx, top.get("stacks", {}), "stacks", material_names)
    data["em"] = _norm_em(ctx, top.get("em", {}), "em", material_names,
                          data["cross_sections"])
    data["thermal"] = _norm_thermal(ctx, top.get("thermal", {}), "thermal",
                                    data["stacks"], data["vias"])
    data["mor"] = _norm_mor(ctx, top.get("mor", {}), "mor", data["stacks"])
    data["circuit"] = _norm_circuit(ctx, top.get("circuit", {}), "circuit")
    data["scenarios"] = _norm_scenarios(ctx, top.get("scenarios", {}),
                                        "scenarios", data)
    return data


def parse_config_text(text: str, base_dir: str = ".") -> ProjectConfig:
    """Parse and validate a config from JSON text."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: "
                          f"{exc.msg}") from None
    return ProjectConfig(_normalize(_Ctx(text), raw), base_dir)


def parse_config(path) -> ProjectConfig:
    """Parse and validate a config file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise IOError_(f"cannot read config {path}: {exc}") from None
    try:
        return parse_config_text(text, base_dir=os.path.dirname(os.fspath(path)) or ".")
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None
