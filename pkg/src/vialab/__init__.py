"""vialab: via/interconnect extraction, thermal analysis, model order
reduction, and circuit simulation for stacked-die assemblies.

The package is organized by physics:

- :mod:`vialab.geometry`, :mod:`vialab.via`, :mod:`vialab.stack` -- 2D
  cross-sections, via detail models, die stacks.
- :mod:`vialab.em` -- skin/proximity-aware impedance (volume filaments),
  electrostatic capacitance, and via-pair coupling extraction.
- :mod:`vialab.thermal` -- voxel finite-volume steady/transient solves and
  RC network extraction.
- :mod:`vialab.mor` -- moment-matching reduction of RC networks.
- :mod:`vialab.circuit` -- SPICE-like netlists, MNA analyses, ABCD transfer
  chains, electro-thermal relaxation.
- :mod:`vialab.config`, :mod:`vialab.scenarios`, :mod:`vialab.cli` -- strict
  JSON configs, scenario pipelines, and the command-line surface.
"""

from .errors import (CapabilityError, ConfigError, GeometryError, IOError_,
                     ResourceError, SolverError, VialabError)
from .materials import DEFAULT_MATERIALS, Material, material_library
from .version import VERSION

__version__ = VERSION

__all__ = [
    "CapabilityError",
    "ConfigError",
    "DEFAULT_MATERIALS",
    "GeometryError",
    "IOError_",
    "Material",
    "ResourceError",
    "SolverError",
    "VERSION",
    "VialabError",
    "material_library",
]
