"""Netlist model and SPICE-like line parser.

Line formats (element letters case-insensitive, `*` starts a comment,
numbers accept engineering suffixes k/m/u/n/p/g/meg):

    R<name> n1 n2 <ohms>
    C<name> n1 n2 <farads> [ic=<volts>]
    L<name> n1 n2 <henries> [ic=<amps>]
    V<name> n+ n- <dc volts> [ac <magnitude>]
    I<name> n+ n- <dc amps> [ac <magnitude>]
    G<name> n+ n- nc+ nc- <siemens>            (VCCS)
    RF<name> n1 n2 table=<csv> [clamp=1]       (tabulated R(f), log-f interp)
    T<name> n1 0 n2 0 rpul= lpul= gpul= cpul= len=
    X<name> <port nodes...> model=<file>       (reduced behavioral block)
    RT<name> n1 n2 tport=<port> r0= t0= alpha= (temperature-dependent R)

AC sources default their magnitude to the DC value when no `ac` token is
given.  Ground is the reserved node "0".
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError
from ..mor import ReducedModel, load_reduced
from ..units import parse_spice_number

GROUND = "0"


@dataclass(frozen=True)
class Resistor:
    name: str
    n1: str
    n2: str
    ohms: float

    def __post_init__(self):
        if self.ohms <= 0:
            raise ConfigError(f"{self.name}: resistance must be > 0")


@dataclass(frozen=True)
class Capacitor:
    """Linear capacitor.

    Negative values are accepted: branch capacitances of synthesized
    macromodels (reduced-order networks, extracted coupling) are routinely
    negative even though the underlying capacitance matrix is positive
    semidefinite.  Zero is rejected.
    """

    name: str
    n1: str
    n2: str
    farads: float
    ic: float = 0.0

    def __post_init__(self):
        if self.farads == 0:
            raise ConfigError(f"{self.name}: capacitance must be nonzero")


@dataclass(frozen=True)
class Inductor:
    name: str
    n1: str
    n2: str
    henries: float
    ic: float = 0.0

    def __post_init__(self):
        if self.henries <= 0:
            raise ConfigError(f"{self.name}: inductance must be > 0")


@dataclass(frozen=True)
class VSource:
    name: str
    n1: str                      # positive terminal
    n2: str
    dc: float = 0.0
    ac: float | None = None

    @property
    def ac_magnitude(self) -> float:
        return self.dc if self.ac is None else self.ac


@dataclass(frozen=True)
class ISource:
    name: str
    n1: str                      # current flows n1 -> n2 through the source
    n2: str
    dc: float = 0.0
    ac: float | None = None

    @property
    def ac_magnitude(self) -> float:
        return self.dc if self.ac is None else self.ac


@dataclass(frozen=True)
class VCCS:
    """Current gm*(v_nc1 - v_nc2) driven from n1 to n2."""

    name: str
    n1: str
    n2: str
    nc1: str
    nc2: str
    gm: float


@dataclass(frozen=True)
class FreqDepResistor:
    """Resistance tabulated against frequency, linear interpolation in log f.

    Evaluation outside the table raises unless ``clamp`` is set, in which
    case end values extend.  f = 0 always returns the first table entry
    (the table's own f=0 row when present).
    """

    name: str
    n1: str
    n2: str
    frequencies: np.ndarray
    ohms: np.ndarray
    clamp: bool = False

    def __post_init__(self):
        f = np.asarray(self.frequencies, dtype=float)
        r = np.asarray(self.ohms, dtype=float)
        if f.ndim != 1 or f.shape != r.shape or f.size < 1:
            raise ConfigError(f"{self.name}: malformed R(f) table")
        if np.any(np.diff(f) <= 0):
            raise ConfigError(f"{self.name}: table frequencies must be "
                              "strictly increasing")
        if f[0] < 0:
            raise ConfigError(f"{self.name}: negative frequency in table")
        if np.any(r <= 0):
            raise ConfigError(f"{self.name}: table resistances must be > 0")
        object.__setattr__(self, "frequencies", f)
        object.__setattr__(self, "ohms", r)

    @property
    def dc_value(self) -> float:
        return float(self.ohms[0])

    def value_at(self, f: float) -> float:
        if f == 0.0:
            return self.dc_value
        freqs, ohms = self.frequencies, self.ohms
        if f < freqs[0] or f > freqs[-1]:
            if not self.clamp:
                raise ConfigError(
                    f"{self.name}: frequency {f:g} Hz outside table range "
                    f"[{freqs[0]:g}, {freqs[-1]:g}] Hz (set clamp=1 to extend)")
            return float(ohms[0] if f < freqs[0] else ohms[-1])
        if freqs[0] == 0.0 and f <= freqs[1]:
            # No log abscissa available on the [0, f1] segment.
            return float(np.interp(f, freqs[:2], ohms[:2]))
        pos = freqs > 0
        return float(np.interp(np.log(f), np.log(freqs[pos]), ohms[pos]))


@dataclass(frozen=True)
class TLine:
    """Transmission line between n1 and n2, both referenced to ground."""

    name: str
    n1: str
    n2: str
    rpul: float                  # ohm/m
    lpul: float                  # H/m
    gpul: float                  # S/m
    cpul: float                  # F/m
    length: float                # m

    def __post_init__(self):
        if self.length <= 0:
            raise ConfigError(f"{self.name}: line length must be > 0")
        if min(self.rpul, self.lpul, self.gpul, self.cpul) < 0:
            raise ConfigError(f"{self.name}: line parameters must be >= 0")

    def abcd(self, f: float) -> np.ndarray:
        """ABCD matrix at frequency f (complex 2x2)."""
        w = 2 * np.pi * f
        zs = self.rpul + 1j * w * self.lpul
        yp = self.gpul + 1j * w * self.cpul
        gl = np.sqrt(zs * yp) * self.length
        if abs(gl) < 1e-12:
            # Degenerate (electrically zero-length) line: series element.
            return np.array([[1.0, zs * self.length], [0.0, 1.0]], complex)
        z0 = np.sqrt(zs / yp)
        return np.array([[np.cosh(gl), z0 * np.sinh(gl)],
                         [np.sinh(gl) / z0, np.cosh(gl)]])


@dataclass(frozen=True)
class ReducedBlock:
    """Behavioral block: reduced RC admittance stamped at its port nodes."""

    name: str
    ports: tuple
    model: ReducedModel
    source: str = ""             # file path, for error messages

    def __post_init__(self):
        m, p = self.model.n_inputs, self.model.n_outputs
        if m != p:
            raise ConfigError(
                f"{self.name}: behavioral block needs a square port map, "
                f"got {m} inputs x {p} outputs")
        if len(self.ports) != m:
            raise ConfigError(
                f"{self.name}: {len(self.ports)} nodes bound to {m} ports")

    def admittance(self, s: complex) -> np.ndarray:
        """Y(s) = Z(s)^-1 with Z = L^T (G + s C)^-1 B."""
        mdl = self.model
        a = mdl.g_hat + (s * mdl.c_hat if s != 0 else 0.0)
        try:
            z = mdl.l_hat.T @ np.linalg.solve(
                a.astype(complex) if s != 0 else a, mdl.b_hat)
            return np.linalg.inv(z)
        except np.linalg.LinAlgError as exc:
            raise ConfigError(
                f"{self.name}: behavioral block is singular at s={s:g}") from exc


@dataclass(frozen=True)
class EthermResistor:
    """Resistor R(T) = r0 * (1 + alpha (T - t0)) with a thermal port."""

    name: str
    n1: str
    n2: str
    tport: str
    r0: float
    t0: float
    alpha: float

    def __post_init__(self):
        if self.r0 <= 0:
            raise ConfigError(f"{self.name}: r0 must be > 0")

    def resistance_at(self, temperature: float) -> float:
        r = self.r0 * (1.0 + self.alpha * (temperature - self.t0))
        if r <= 0:
            raise ConfigError(
                f"{self.name}: R(T) = {r:g} ohm <= 0 at T = {temperature:g} K")
        return r


Element = object   # any of the classes above


@dataclass(frozen=True)
class Netlist:
    """Parsed circuit: ordered elements plus the node name universe."""

    elements: tuple
    nodes: tuple = field(default=())     # non-ground, in first-appearance order

    def __post_init__(self):
        seen: dict = {}
        names = set()
        for el in self.elements:
            if el.name in names:
                raise ConfigError(f"duplicate element name {el.name}")
            names.add(el.name)
            for node in _element_nodes(el):
                if node != GROUND and node not in seen:
                    seen[node] = None
        object.__setattr__(self, "nodes", tuple(seen.keys()))

    def element(self, name: str):
        for el in self.elements:
            if el.name == name:
                return el
        raise KeyError(name)

    def of_type(self, *types) -> tuple:
        return tuple(el for el in self.elements if isinstance(el, types))


def _element_nodes(el) -> tuple:
    if isinstance(el, VCCS):
        return (el.n1, el.n2, el.nc1, el.nc2)
    if isinstance(el, ReducedBlock):
        return el.ports
    return (el.n1, el.n2)


def _parse_kv(tokens, what: str) -> dict:
    out = {}
    for tok in tokens:
        if "=" not in tok:
            raise ConfigError(f"{what}: expected key=value, got {tok!r}")
        key, val = tok.split("=", 1)
        out[key.lower()] = val
    return out


def _load_rf_table(path: str, name: str):
    """CSV columns frequency_hz and r_ohm (header), or two bare columns."""
    try:
        with open(path, newline="", encoding="ascii") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ConfigError(f"{name}: cannot read table {path}: {exc}") from exc
    rows = [r for r in rows if r and any(tok.strip() for tok in r)]
    if not rows:
        raise ConfigError(f"{name}: empty table {path}")
    header = rows[0]
    try:
        float(header[0])
        fi, ri = 0, 1
        data = rows
    except ValueError:
        cols = [h.strip().lower() for h in header]
        try:
            fi = cols.index("frequency_hz")
        except ValueError:
            raise ConfigError(f"{name}: table {path} lacks a frequency_hz column")
        ri = next((k for k, c in enumerate(cols)
                   if c in ("r_ohm", "r_ohm_per_m", "rk_ohm_per_m")), None)
        if ri is None:
            raise ConfigError(f"{name}: table {path} lacks a resistance column")
        data = rows[1:]
    try:
        freqs = [float(r[fi]) for r in data]
        ohms = [float(r[ri]) for r in data]
    except (ValueError, IndexError) as exc:
        raise ConfigError(f"{name}: malformed table row in {path}") from exc
    return np.array(freqs), np.array(ohms)


def parse_netlist(text: str, base_dir: str = ".") -> Netlist:
    """Parse netlist source; relative table/model paths resolve to base_dir."""
    elements = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("*"):
            continue
        try:
            elements.append(_parse_line(line, base_dir))
        except ConfigError as exc:
            raise ConfigError(f"line {lineno}: {exc}") from None
    if not elements:
        raise ConfigError("netlist contains no elements")
    return Netlist(tuple(elements))


def _resolve(base_dir: str, path: str) -> str:
    return path if os.path.isabs(path) else os.path.join(base_dir, path)


def _parse_line(line: str, base_dir: str):
    tokens = line.split()
    name = tokens[0]
    kind = name[:2].upper() if name[:2].upper() in ("RF", "RT") else name[0].upper()

    if kind in ("R", "C", "L"):
        if len(tokens) < 4:
            raise ConfigError(f"{name}: expected '<name> n1 n2 <value>'")
        value = parse_spice_number(tokens[3])
        extra = _parse_kv(tokens[4:], name)
        unknown = set(extra) - {"ic"}
        if unknown:
            raise ConfigError(f"{name}: unknown options {sorted(unknown)}")
        if kind == "R":
            if extra:
                raise ConfigError(f"{name}: resistors take no ic")
            return Resistor(name, tokens[1], tokens[2], value)
        ic = parse_spice_number(extra["ic"]) if "ic" in extra else 0.0
        cls = Capacitor if kind == "C" else Inductor
        return cls(name, tokens[1], tokens[2], value, ic)

    if kind in ("V", "I"):
        if len(tokens) < 4:
            raise ConfigError(f"{name}: expected '<name> n+ n- <dc>'")
        dc = parse_spice_number(tokens[3])
        ac = None
        rest = [t.lower() for t in tokens[4:]]
        if rest:
            if rest[0] != "ac" or len(rest) != 2:
                raise ConfigError(f"{name}: trailing tokens must be 'ac <mag>'")
            ac = parse_spice_number(rest[1])
        cls = VSource if kind == "V" else ISource
        return cls(name, tokens[1], tokens[2], dc, ac)

    if kind == "G":
        if len(tokens) != 6:
            raise ConfigError(f"{name}: expected '<name> n+ n- nc+ nc- <gm>'")
        return VCCS(name, tokens[1], tokens[2], tokens[3], tokens[4],
                    parse_spice_number(tokens[5]))

    if kind == "RF":
        if len(tokens) < 4:
            raise ConfigError(f"{name}: expected '<name> n1 n2 table=<csv>'")
        kv = _parse_kv(tokens[3:], name)
        unknown = set(kv) - {"table", "clamp"}
        if unknown:
            raise ConfigError(f"{name}: unknown options {sorted(unknown)}")
        if "table" not in kv:
            raise ConfigError(f"{name}: missing table=<csv path>")
        freqs, ohms = _load_rf_table(_resolve(base_dir, kv["table"]), name)
        clamp = kv.get("clamp", "0") not in ("0", "false", "no")
        return FreqDepResistor(name, tokens[1], tokens[2], freqs, ohms, clamp)

    if kind == "T":
        if len(tokens) < 10:
            raise ConfigError(
                f"{name}: expected '<name> n1 0 n2 0 rpul= lpul= gpul= cpul= len='")
        if tokens[2] != GROUND or tokens[4] != GROUND:
            raise ConfigError(f"{name}: line reference nodes must be ground 0")
        kv = _parse_kv(tokens[5:], name)
        required = {"rpul", "lpul", "gpul", "cpul", "len"}
        missing = required - set(kv)
        if missing:
            raise ConfigError(f"{name}: missing parameters {sorted(missing)}")
        unknown = set(kv) - required
        if unknown:
            raise ConfigError(f"{name}: unknown options {sorted(unknown)}")
        vals = {k: parse_spice_number(v) for k, v in kv.items()}
        return TLine(name, tokens[1], tokens[3], vals["rpul"], vals["lpul"],
                     vals["gpul"], vals["cpul"], vals["len"])

    if kind == "X":
        if len(tokens) < 3:
            raise ConfigError(f"{name}: expected '<name> <ports...> model=<file>'")
        kv = _parse_kv(tokens[-1:], name)
        if set(kv) != {"model"}:
            raise ConfigError(f"{name}: last token must be model=<file>")
        path = _resolve(base_dir, kv["model"])
        try:
            model = load_reduced(path)
        except OSError as exc:
            raise ConfigError(f"{name}: cannot read model {path}: {exc}") from exc
        return ReducedBlock(name, tuple(tokens[1:-1]), model, path)

    if kind == "RT":
        if len(tokens) < 4:
            raise ConfigError(
                f"{name}: expected '<name> n1 n2 tport=<port> r0= t0= alpha='")
        kv = _parse_kv(tokens[3:], name)
        required = {"tport", "r0", "t0", "alpha"}
        missing = required - set(kv)
        if missing:
            raise ConfigError(f"{name}: missing parameters {sorted(missing)}")
        unknown = set(kv) - required
        if unknown:
            raise ConfigError(f"{name}: unknown options {sorted(unknown)}")
        return EthermResistor(name, tokens[1], tokens[2], kv["tport"],
                              parse_spice_number(kv["r0"]),
                              parse_spice_number(kv["t0"]),
                              parse_spice_number(kv["alpha"]))

    raise ConfigError(f"unknown element type in line {line!r}")
