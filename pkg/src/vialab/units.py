"""Unit handling: config quantities with suffixes and SPICE engineering notation.

All internal computation is SI (m, s, K, Ohm, H, F, W).  Config files may
write quantities as strings with a unit suffix ("10um", "2.5 GHz", "5mW");
netlists use SPICE engineering suffixes ("1k", "10meg", "100n").
"""

from __future__ import annotations

import re

from .errors import ConfigError

# suffix -> (scale to SI, dimension tag); exact match wins, then casefolded.
_UNIT_TABLE = {
    # length
    "m": (1.0, "length"),
    "cm": (1e-2, "length"),
    "mm": (1e-3, "length"),
    "um": (1e-6, "length"),
    "µm": (1e-6, "length"),
    "nm": (1e-9, "length"),
    # frequency
    "Hz": (1.0, "frequency"),
    "kHz": (1e3, "frequency"),
    "MHz": (1e6, "frequency"),
    "GHz": (1e9, "frequency"),
    # power
    "W": (1.0, "power"),
    "kW": (1e3, "power"),
    "mW": (1e-3, "power"),
    "uW": (1e-6, "power"),
    "µW": (1e-6, "power"),
    # temperature (absolute kelvin only; no offset scales)
    "K": (1.0, "temperature"),
    # time
    "s": (1.0, "time"),
    "ms": (1e-3, "time"),
    "us": (1e-6, "time"),
    "µs": (1e-6, "time"),
    "ns": (1e-9, "time"),
    # electrical
    "V": (1.0, "voltage"),
    "mV": (1e-3, "voltage"),
    "A": (1.0, "current"),
    "mA": (1e-3, "current"),
    "ohm": (1.0, "resistance"),
    "kohm": (1e3, "resistance"),
    "megohm": (1e6, "resistance"),
    "F": (1.0, "capacitance"),
    "uF": (1e-6, "capacitance"),
    "nF": (1e-9, "capacitance"),
    "pF": (1e-12, "capacitance"),
    "H": (1.0, "inductance"),
    "mH": (1e-3, "inductance"),
    "uH": (1e-6, "inductance"),
    "nH": (1e-9, "inductance"),
}

# casefolded fallback for the units that stay unambiguous in this domain
_FOLDED = {}
for _sym, _val in _UNIT_TABLE.items():
    _FOLDED.setdefault(_sym.casefold(), _val)

_QUANTITY_RE = re.compile(r"^\s*([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)\s*([^\s\d]*)\s*$")


def parse_quantity(raw, expect: str | None = None, where: str = "") -> float:
    """Convert a config value to SI.

    `raw` may already be a number (taken as SI) or a string with a unit
    suffix.  `expect` optionally names the dimension ("length", "frequency",
    ...) and rejects suffixes of any other dimension.  `where` is a config
    path used in error messages.
    """
    if isinstance(raw, bool):
        raise ConfigError(f"{where}: expected a quantity, got a boolean")
    if isinstance(raw, (int, float)):
        return float(raw)
    if not isinstance(raw, str):
        raise ConfigError(f"{where}: expected number or quantity string, got {type(raw).__name__}")
    m = _QUANTITY_RE.match(raw)
    if not m:
        raise ConfigError(f"{where}: cannot parse quantity {raw!r}")
    value, suffix = float(m.group(1)), m.group(2)
    if not suffix:
        return value
    entry = _UNIT_TABLE.get(suffix) or _FOLDED.get(suffix.casefold())
    if entry is None:
        raise ConfigError(f"{where}: unknown unit suffix {suffix!r} in {raw!r}")
    scale, dim = entry
    if expect is not None and dim != expect:
        raise ConfigError(f"{where}: expected a {expect}, got unit {suffix!r} in {raw!r}")
    return value * scale


# SPICE engineering suffixes; 'meg' must be matched before 'm'.
_SPICE_SUFFIXES = [
    ("meg", 1e6),
    ("f", 1e-15),
    ("p", 1e-12),
    ("n", 1e-9),
    ("u", 1e-6),
    ("m", 1e-3),
    ("k", 1e3),
    ("g", 1e9),
    ("t", 1e12),
]

_SPICE_RE = re.compile(r"^([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)([a-zA-Z]*)$")


def parse_spice_number(token: str) -> float:
    """Parse a SPICE-style number: '4.7k', '10meg', '100n', '1e-9', '2.2uF'.

    Letters after a recognized suffix are ignored, as in traditional SPICE
    ('10kohm' == '10k').  A bare unit word with no known multiplier is an
    error rather than silently 1x.
    """
    m = _SPICE_RE.match(token.strip())
    if not m:
        raise ConfigError(f"malformed number {token!r}")
    value = float(m.group(1))
    tail = m.group(2).lower()
    if not tail:
        return value
    for suffix, scale in _SPICE_SUFFIXES:
        if tail.startswith(suffix):
            return value * scale
    # no multiplier: allow pure unit words like 'ohm', 'v', 'hz'
    if tail in ("ohm", "ohms", "v", "a", "hz", "s", "h"):
        return value
    raise ConfigError(f"unknown suffix {m.group(2)!r} in number {token!r}")


def fmt_si(x: float) -> str:
    """Full-precision scientific notation used in every CSV the tool writes."""
    return f"{x:.17e}"
