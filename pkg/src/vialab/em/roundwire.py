"""Analytic skin-effect solution for a solid round wire.

The AC/DC resistance ratio of an isolated circular conductor follows from
the Kelvin functions ber/bei:

    q = sqrt(2) * a / delta,   delta = sqrt(2 / (omega * mu0 * sigma))

    R_AC / R_DC = (q / 2) * (ber q * bei' q - bei q * ber' q)
                          / (ber' q ^ 2 + bei' q ^ 2)

This is the verification oracle for the volume-filament solver.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import special

from ..errors import ConfigError, SolverError

MU0 = 4e-7 * math.pi

# beyond this the ber/bei evaluations overflow double precision headroom and
# the ratio is better served by the asymptotic form; callers get an error
MAX_RADIUS_OVER_DEPTH = 50.0


def skin_depth(sigma: float, f: float) -> float:
    """delta = sqrt(2 / (omega mu0 sigma))."""
    if sigma <= 0 or f <= 0:
        raise ConfigError("skin depth needs sigma > 0 and f > 0")
    return math.sqrt(2.0 / (2 * math.pi * f * MU0 * sigma))


def resistance_ratio_from_q(q: float) -> float:
    """R_AC/R_DC as a function of q = sqrt(2) a/delta."""
    if q == 0.0:
        return 1.0
    # below this the Kelvin-function quotient loses digits to cancellation;
    # the Taylor expansion is exact to ~1e-16 there
    if q < 1e-2:
        return 1.0 + q ** 4 / 192.0  # == 1 + (a/delta)^4 / 48
    with np.errstate(invalid="ignore", over="ignore"):
        num = special.ber(q) * special.beip(q) - special.bei(q) * special.berp(q)
        den = special.berp(q) ** 2 + special.beip(q) ** 2
    if not math.isfinite(num) or not math.isfinite(den) or den == 0.0:
        raise SolverError(f"Kelvin-function evaluation failed at q={q:.3g}")
    return 0.5 * q * num / den


def round_wire_oracle(radius: float, sigma: float, f: float) -> float:
    """R_AC/R_DC for a solid round wire of the given radius at frequency f.

    Valid for a/delta <= 50 (raises beyond; the asymptotic form
    a/(2 delta) + 1/4 + (3/32) delta/a takes over there anyway).
    """
    if radius <= 0 or sigma <= 0:
        raise ConfigError("round_wire_oracle needs radius > 0 and sigma > 0")
    if f < 0:
        raise ConfigError("frequency must be >= 0")
    if f == 0.0:
        return 1.0
    ratio = radius / skin_depth(sigma, f)
    if ratio > MAX_RADIUS_OVER_DEPTH:
        raise ConfigError(f"a/delta = {ratio:.1f} outside supported range "
                          f"(<= {MAX_RADIUS_OVER_DEPTH:g})")
    return resistance_ratio_from_q(math.sqrt(2.0) * ratio)
