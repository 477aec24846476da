"""Material properties shared by the electrical and thermal solvers."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ConfigError


@dataclass(frozen=True)
class Material:
    """Bulk material with the four properties the solvers consume.

    electrical_conductivity may be 0 (insulators); everything else must be
    positive.
    """

    name: str
    electrical_conductivity: float  # S/m
    relative_permittivity: float    # dimensionless
    thermal_conductivity: float     # W/(m K)
    volumetric_heat_capacity: float  # J/(m^3 K)

    def __post_init__(self):
        if self.electrical_conductivity < 0:
            raise ConfigError(f"material {self.name!r}: conductivity must be >= 0")
        for field_name in ("relative_permittivity", "thermal_conductivity",
                           "volumetric_heat_capacity"):
            if getattr(self, field_name) <= 0:
                raise ConfigError(f"material {self.name!r}: {field_name} must be > 0")


# Handbook values; every entry can be overridden or extended from config.
DEFAULT_MATERIALS = {
    "copper": Material("copper", 5.8e7, 1.0, 400.0, 3.45e6),
    "tungsten": Material("tungsten", 1.8e7, 1.0, 173.0, 2.58e6),
    "silicon": Material("silicon", 0.0, 11.7, 148.0, 1.66e6),
    "oxide": Material("oxide", 0.0, 3.9, 1.4, 1.79e6),
}


def material_library(overrides=None) -> dict:
    """Default material table, optionally extended/overridden by `overrides`."""
    lib = dict(DEFAULT_MATERIALS)
    if overrides:
        lib.update(overrides)
    return lib


def lookup(lib: dict, name: str) -> Material:
    try:
        return lib[name]
    except KeyError:
        raise ConfigError(f"unknown material {name!r} "
                          f"(known: {', '.join(sorted(lib))})") from None
