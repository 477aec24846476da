"""Lumped coupling extraction between adjacent vertical conductors."""

import numpy as np
import pytest

from vialab.errors import ConfigError
from vialab.materials import DEFAULT_MATERIALS, Material
from vialab.em.coupling import CouplingModel, coupling_sweep

CU = DEFAULT_MATERIALS["copper"]
SUB = Material("doped_silicon", 10.0, 11.7, 148.0, 1.66e6)


@pytest.fixture(scope="module")
def table():
    return coupling_sweep(2.5e-6, [10e-6, 15e-6, 25e-6], SUB, CU,
                          frequency=1e9, cell_size=0.5e-6)


def test_all_four_elements_extracted(table):
    assert table.distances.shape == (3,)
    assert np.all(table.rk >= 0)
    assert np.all(table.lk > 0)
    assert np.all(table.ck > 0)
    assert np.all(table.gk > 0)
    assert table.frequency == 1e9


def test_coupling_weakens_with_distance(table):
    assert np.all(np.diff(table.ck) < 0)
    assert np.all(np.diff(table.gk) < 0)
    # mutual reactance grows only logarithmically but the branch impedance
    # seen between the conductors still rises with separation
    assert np.all(np.diff(table.rk) < 0)


def test_substrate_relation_between_g_and_c(table):
    # G_k = (sigma_sub / eps) C_k with the same field solution
    eps = 8.8541878128e-12 * SUB.relative_permittivity
    want = SUB.electrical_conductivity / eps * table.ck
    np.testing.assert_allclose(table.gk, want, rtol=1e-9)


def test_model_at_scales_with_length(table):
    m = table.model_at(1, length=200e-6)
    assert isinstance(m, CouplingModel)
    assert m.distance == pytest.approx(15e-6)
    assert m.length == pytest.approx(200e-6)
    assert m.rk_ohm == pytest.approx(table.rk[1] * 200e-6)
    assert m.lk_h == pytest.approx(table.lk[1] * 200e-6)
    assert m.ck_f == pytest.approx(table.ck[1] * 200e-6)
    assert m.gk_s == pytest.approx(table.gk[1] * 200e-6)


def test_model_at_validates_arguments(table):
    with pytest.raises(ConfigError):
        table.model_at(99)
    with pytest.raises(ConfigError):
        table.model_at(0, length=0.0)


def test_insulating_substrate_has_zero_shunt_conductance():
    ox = DEFAULT_MATERIALS["oxide"]
    t = coupling_sweep(2.5e-6, [10e-6], ox, CU, frequency=1e9,
                       cell_size=0.5e-6)
    assert t.gk[0] == 0.0
    assert t.ck[0] > 0
