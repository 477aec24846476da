"""Exception hierarchy shared by all vialab modules.

Every error carries the process exit code the CLI maps it to:
configuration problems exit 1, solver/convergence failures exit 2,
file-system trouble exits 3.
"""


class VialabError(Exception):
    """Base class for all toolkit errors."""

    exit_code = 1


class ConfigError(VialabError):
    """Invalid configuration, netlist, geometry parameters, or references."""

    exit_code = 1


class GeometryError(ConfigError):
    """Shapes overlap, placements out of bounds, or similar geometric misuse."""


class ResourceError(ConfigError):
    """A configured budget (cell count, voxel count, dense-matrix cap) was exceeded."""


class CapabilityError(ConfigError):
    """The requested analysis is documented as unsupported for the given element."""


class SolverError(VialabError):
    """Singular system, non-convergence, or divergence of an iterative scheme."""

    exit_code = 2


class IOError_(VialabError):
    """File could not be read or written."""

    exit_code = 3
