"""Via detail models: required parameters, levels, and footprints."""

import pytest

from vialab.errors import ConfigError
from vialab.materials import DEFAULT_MATERIALS
from vialab.via import via_detail_model

CU = DEFAULT_MATERIALS["copper"]
W = DEFAULT_MATERIALS["tungsten"]


def base_params():
    return {
        "diameter": 50e-6,
        "length": 100e-6,
        "material": CU,
        "connection_thickness": 2e-6,
        "connection_material": CU,
        "metallization_thickness": 2e-6,
        "metallization_material": CU,
    }


def test_level1_single_segment():
    via = via_detail_model(1, base_params())
    assert via.detail_level == 1
    assert len(via.segments) == 1
    assert via.length == pytest.approx(100e-6)
    assert via.body_material is CU
    assert len(via.connection_region) == 1
    assert len(via.metallization_region) == 1


def test_footprint_is_centered_bounding_box():
    via = via_detail_model(1, base_params())
    xmin, ymin, xmax, ymax = via.footprint()
    assert xmax - xmin == pytest.approx(50e-6)
    assert ymax - ymin == pytest.approx(50e-6)
    assert xmin == pytest.approx(-25e-6)


def test_level2_tapered_body_and_split_regions():
    params = base_params()
    params["bottom_diameter"] = 30e-6
    via = via_detail_model(2, params)
    assert via.detail_level == 2
    assert len(via.segments) >= 2
    assert len(via.connection_region) >= 2
    # total length is preserved across segments
    assert via.length == pytest.approx(100e-6)
    # footprint reflects the widest segment; the linear taper is sampled at
    # segment midpoints, so with 4 segments that is d_top - (d_top-d_bot)/8
    xmin, _, xmax, _ = via.footprint()
    assert xmax - xmin == pytest.approx(47.5e-6)


def test_level3_material_sublayers():
    params = base_params()
    params["metallization_materials"] = [W, CU]
    via = via_detail_model(3, params)
    assert via.detail_level == 3
    mats = {layer.material.name for layer in via.metallization_region}
    assert "tungsten" in mats


def test_missing_parameter_is_reported_by_name():
    params = base_params()
    del params["connection_thickness"]
    with pytest.raises(ConfigError, match="connection_thickness"):
        via_detail_model(1, params)


def test_bad_level_rejected():
    with pytest.raises(ConfigError):
        via_detail_model(4, base_params())
