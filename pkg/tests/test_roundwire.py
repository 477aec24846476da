"""Analytic round-wire AC/DC resistance ratio used to validate the solver."""

import math

import numpy as np
import pytest

from vialab.errors import ConfigError, SolverError
from vialab.em.roundwire import (resistance_ratio_from_q, round_wire_oracle,
                                 skin_depth)

SIGMA_CU = 5.8e7


def test_skin_depth_copper_at_1ghz():
    # sqrt(2 / (2*pi*1e9 * 4*pi*1e-7 * 5.8e7)) ~ 2.09 um
    assert skin_depth(SIGMA_CU, 1e9) == pytest.approx(2.09e-6, rel=1e-2)


def test_skin_depth_rejects_nonphysical_inputs():
    with pytest.raises(ConfigError):
        skin_depth(0.0, 1e9)
    with pytest.raises(ConfigError):
        skin_depth(SIGMA_CU, 0.0)


def test_dc_limit_is_exactly_one():
    assert round_wire_oracle(5e-6, SIGMA_CU, 0.0) == 1.0
    # low-frequency Taylor region: 1 + (a/delta)^4 / 48
    a, f = 5e-6, 1e3
    x = a / skin_depth(SIGMA_CU, f)
    assert round_wire_oracle(a, SIGMA_CU, f) == pytest.approx(
        1.0 + x**4 / 48.0, rel=1e-9)


def test_thick_wire_asymptote():
    """For a/delta >> 1 the ratio tends to a/(2d) + 1/4 + 3d/(32a)."""
    radius, f = 1e-3, 1e7
    x = radius / skin_depth(SIGMA_CU, f)
    assert 20 < x <= 50
    expected = x / 2 + 0.25 + 3.0 / (32.0 * x)
    assert round_wire_oracle(radius, SIGMA_CU, f) == pytest.approx(
        expected, rel=1e-3)


def test_ratio_is_monotone_in_q():
    qs = np.linspace(0.0, math.sqrt(2) * 50, 200)
    ratios = [resistance_ratio_from_q(q) for q in qs]
    assert all(b >= a for a, b in zip(ratios, ratios[1:]))
    assert ratios[0] == 1.0


def test_radius_over_depth_limit_enforced():
    with pytest.raises(ConfigError, match="outside supported range"):
        round_wire_oracle(1e-3, SIGMA_CU, 1e9)


def test_kelvin_overflow_reported():
    with pytest.raises(SolverError):
        resistance_ratio_from_q(1e4)
