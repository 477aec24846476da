"""Source - line - via - line - load transfer function via ABCD cascade.

Each line contributes [[cosh gl, Z0 sinh gl], [sinh gl / Z0, cosh gl]]
with g = sqrt((R'+jwL')(G'+jwC')) and Z0 = sqrt((R'+jwL')/(G'+jwC'));
the via is a series impedance block [[1, Z], [0, 1]].  The chain is
driven by an ideal source behind Rs and terminated in RL, and
H(f) = V_load / V_source = 1 / (A_tot + B_tot / RL).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError
from .mna import AnalysisResult
from .netlist import FreqDepResistor


@dataclass(frozen=True)
class LineParams:
    """Per-unit-length line constants; zero length degenerates to identity."""

    rpul: float
    lpul: float
    gpul: float
    cpul: float
    length: float

    def __post_init__(self):
        if self.length < 0:
            raise ConfigError("line length must be >= 0")
        if min(self.rpul, self.lpul, self.gpul, self.cpul) < 0:
            raise ConfigError("line parameters must be >= 0")

    def abcd(self, f: float) -> np.ndarray:
        if self.length == 0.0:
            return np.eye(2, dtype=complex)
        w = 2 * np.pi * f
        zs = self.rpul + 1j * w * self.lpul
        yp = self.gpul + 1j * w * self.cpul
        gl = np.sqrt(zs * yp) * self.length
        if abs(gl) < 1e-12:
            return np.array([[1.0, zs * self.length], [0.0, 1.0]], complex)
        z0 = np.sqrt(zs / yp)
        return np.array([[np.cosh(gl), z0 * np.sinh(gl)],
                         [np.sinh(gl) / z0, np.cosh(gl)]])


def _series_block(z: complex) -> np.ndarray:
    return np.array([[1.0, z], [0.0, 1.0]], complex)


def _via_resistance(via, f: float) -> float:
    if via is None:
        return 0.0
    if isinstance(via, FreqDepResistor):
        return via.value_at(f)
    if isinstance(via, (int, float)):
        if via < 0:
            raise ConfigError("fixed via resistance must be >= 0")
        return float(via)
    raise ConfigError(f"unsupported via element {type(via).__name__}; "
                      "use None (short), a resistance, or an R(f) table")


@dataclass(frozen=True)
class TransferChain:
    """Terminated cascade: source Rs - line1 - via - line2 - load RL."""

    rs: float
    line1: LineParams
    via: object            # None (short) | ohms | FreqDepResistor
    line2: LineParams
    rl: float

    def __post_init__(self):
        if self.rs < 0 or self.rl <= 0:
            raise ConfigError("need Rs >= 0 and RL > 0")


def transfer_function(chain: TransferChain, f_grid) -> AnalysisResult:
    """H(f) = V_load/V_source over the grid; echoes the grid exactly."""
    f_grid = np.asarray(list(f_grid), dtype=float)
    if f_grid.size == 0:
        raise ConfigError("empty frequency grid")
    if np.any(np.diff(f_grid) <= 0):
        raise ConfigError("frequency grid must be sorted strictly ascending")
    h = np.empty(f_grid.size, dtype=complex)
    src = _series_block(chain.rs)
    for k, f in enumerate(f_grid):
        m = src @ chain.line1.abcd(f) \
            @ _series_block(_via_resistance(chain.via, f)) \
            @ chain.line2.abcd(f)
        denom = m[0, 0] + m[0, 1] / chain.rl
        if denom == 0:
            raise ConfigError(f"degenerate chain at f = {f:g} Hz")
        h[k] = 1.0 / denom
    return AnalysisResult("transfer", {}, frequencies=f_grid.copy(), h=h)


def cutoff_frequency(result: AnalysisResult) -> float:
    """First -3 dB crossing of |H| relative to the lowest-frequency value.

    Log-interpolates between grid points; NaN if |H| never drops below
    |H(f_min)|/sqrt(2) on the grid.
    """
    if result.h is None:
        raise ConfigError("cutoff_frequency needs a transfer result")
    mag = np.abs(result.h)
    ref = mag[0] / np.sqrt(2.0)
    below = np.flatnonzero(mag < ref)
    if below.size == 0:
        return float("nan")
    k = int(below[0])
    if k == 0:
        return float(result.frequencies[0])
    f0, f1 = result.frequencies[k - 1], result.frequencies[k]
    m0, m1 = mag[k - 1], mag[k]
    t = (m0 - ref) / (m0 - m1)
    return float(np.exp(np.log(f0) + t * (np.log(f1) - np.log(f0))))
