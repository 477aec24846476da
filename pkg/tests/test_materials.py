"""Material library defaults, overrides, and lookups."""

import pytest

from vialab.errors import ConfigError
from vialab.materials import DEFAULT_MATERIALS, Material, lookup, material_library


def test_default_library_has_process_materials():
    lib = material_library()
    for name in ("copper", "tungsten", "silicon", "oxide"):
        assert name in lib
        assert lib[name].name == name


def test_copper_properties_are_physical():
    cu = DEFAULT_MATERIALS["copper"]
    assert cu.electrical_conductivity == pytest.approx(5.8e7, rel=0.05)
    assert 350.0 < cu.thermal_conductivity < 420.0


def test_silicon_is_a_poor_conductor_good_heat_spreader():
    si = DEFAULT_MATERIALS["silicon"]
    assert si.electrical_conductivity == 0.0
    assert 100.0 < si.thermal_conductivity < 200.0


def test_overrides_extend_and_shadow():
    custom = Material("copper", 1.0, 1.0, 1.0, 1.0)
    lib = material_library({"copper": custom, "mud": Material("mud", 0, 1, 1, 1)})
    assert lib["copper"].electrical_conductivity == 1.0
    assert "mud" in lib
    # the default table is untouched
    assert DEFAULT_MATERIALS["copper"].electrical_conductivity > 1e7


def test_lookup_reports_known_names():
    with pytest.raises(ConfigError, match="unobtainium"):
        lookup(material_library(), "unobtainium")
