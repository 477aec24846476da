"""Stack assembly: layers, placed basic modules, and device power sites.

A stack is an ordered list of layers (bottom to top), each a substrate slab
with a lateral extent.  Basic modules (vias from a module library) and device
power sites are placed on layers by center position; rotations are restricted
to quarter turns.  Coordinates are layer-local with the origin at the lower
left corner of the lateral extent.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .errors import ConfigError, GeometryError
from .materials import Material
from .via import ViaGeometry


@dataclass(frozen=True)
class Layer:
    thickness: float
    extent_x: float
    extent_y: float
    material: Material

    def __post_init__(self):
        if self.thickness <= 0 or self.extent_x <= 0 or self.extent_y <= 0:
            raise GeometryError("layer dimensions must be > 0")


@dataclass(frozen=True)
class ModulePlacement:
    module_id: str
    layer: int
    x: float
    y: float
    rotation: int = 0

    def __post_init__(self):
        if self.rotation % 90 != 0:
            raise GeometryError("rotations are restricted to quarter turns")


@dataclass(frozen=True)
class DeviceSite:
    """Power-dissipating footprint centered at (x, y) on a layer."""

    layer: int
    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        if self.w <= 0 or self.h <= 0:
            raise GeometryError("device footprint must be > 0")


@dataclass(frozen=True)
class StackModel:
    layers: tuple       # of Layer, bottom to top
    placements: tuple   # of ModulePlacement, input order preserved
    devices: tuple      # of DeviceSite
    module_library: dict = field(default_factory=dict)
    diagnostics: tuple = ()


def _check_in_extent(layer: Layer, x: float, y: float, what: str, idx: int):
    if not (0.0 <= x <= layer.extent_x and 0.0 <= y <= layer.extent_y):
        raise GeometryError(f"{what} {idx} at ({x:.3e}, {y:.3e}) outside layer extent "
                            f"{layer.extent_x:.3e} x {layer.extent_y:.3e}")


def assemble_stack(layers, placements, module_library: dict,
                   devices=()) -> StackModel:
    """Validate and assemble a stack model.

    Placement order is preserved.  A diagnostic "vertically aligned power" is
    recorded when device sites on different layers share the same (x, y).
    """
    layers = tuple(layers)
    if not layers:
        raise GeometryError("a stack needs at least one layer")
    for p in placements:
        if p.module_id not in module_library:
            raise ConfigError(f"unknown module_id {p.module_id!r}")
        if not 0 <= p.layer < len(layers):
            raise GeometryError(f"placement layer {p.layer} out of range")
        _check_in_extent(layers[p.layer], p.x, p.y, "module", p.layer)
    for i, d in enumerate(devices):
        if not 0 <= d.layer < len(layers):
            raise GeometryError(f"device layer {d.layer} out of range")
        _check_in_extent(layers[d.layer], d.x, d.y, "device", i)

    diagnostics = []
    seen = {}
    for d in devices:
        key = (round(d.x, 12), round(d.y, 12))
        if key in seen and seen[key] != d.layer:
            diagnostics.append("vertically aligned power")
            break
        seen[key] = d.layer
    return StackModel(layers, tuple(placements), tuple(devices),
                      dict(module_library), tuple(diagnostics))


def _rotate_point(x, y, ex, ey, quarter_turns):
    """Rotate (x, y) about the extent center by `quarter_turns` * 90 degrees
    counterclockwise; one turn on a square of side a maps (x, y) -> (a-y, x).
    Each turn swaps the extent axes, so 180 degrees on a non-square extent
    maps (x, y) -> (ex-x, ey-y) as it must."""
    for _ in range(quarter_turns % 4):
        x, y = ey - y, x
        ex, ey = ey, ex
    return x, y


def rotate_layer(model: StackModel, layer: int, quarter_turns: int) -> StackModel:
    """Rotate one layer's placements and devices about the layer center."""
    if not 0 <= layer < len(model.layers):
        raise GeometryError(f"layer {layer} out of range")
    q = quarter_turns % 4
    lay = model.layers[layer]
    if q % 2 == 1 and abs(lay.extent_x - lay.extent_y) > 1e-15 * max(lay.extent_x, lay.extent_y):
        raise GeometryError("90/270 degree rotation needs a square lateral extent")
    if q == 0:
        return model

    placements = []
    for p in model.placements:
        if p.layer != layer:
            placements.append(p)
            continue
        x, y = _rotate_point(p.x, p.y, lay.extent_x, lay.extent_y, q)
        placements.append(replace(p, x=x, y=y, rotation=(p.rotation + 90 * q) % 360))
    devices = []
    for d in model.devices:
        if d.layer != layer:
            devices.append(d)
            continue
        x, y = _rotate_point(d.x, d.y, lay.extent_x, lay.extent_y, q)
        w, h = (d.h, d.w) if q % 2 == 1 else (d.w, d.h)
        devices.append(replace(d, x=x, y=y, w=w, h=h))
    return replace(model, placements=tuple(placements), devices=tuple(devices))


def _module_halfwidth(via: ViaGeometry) -> float:
    xmin, ymin, xmax, ymax = via.footprint()
    return max(xmax - xmin, ymax - ymin) / 2


def place_thermal_vias(model: StackModel, positions, module_id: str,
                       via: ViaGeometry) -> StackModel:
    """Add a via module at each position on every layer of the stack.

    Rejects positions whose footprint (rotation-expanded bounding box)
    overlaps an existing module on the same layer.  An empty position list
    returns the model unchanged.
    """
    if not positions:
        return model
    library = dict(model.module_library)
    library[module_id] = via
    half_new = _module_halfwidth(via)

    new_placements = list(model.placements)
    for (x, y) in positions:
        for li, lay in enumerate(model.layers):
            _check_in_extent(lay, x, y, "thermal via", li)
            for p in model.placements:
                if p.layer != li:
                    continue
                half_old = _module_halfwidth(library[p.module_id])
                if abs(p.x - x) < half_old + half_new and abs(p.y - y) < half_old + half_new:
                    raise GeometryError(f"thermal via at ({x:.3e}, {y:.3e}) collides with "
                                        f"module {p.module_id!r} on layer {li}")
            new_placements.append(ModulePlacement(module_id, li, x, y))
    return replace(model, placements=tuple(new_placements), module_library=library)
