"""Configuration parsing: normalization, diagnostics, and object builders."""

import json
import pathlib

import numpy as np
import pytest

from vialab.errors import ConfigError, IOError_
from vialab.config import build_frequency_grid, parse_config, parse_config_text

EXAMPLE = pathlib.Path(__file__).resolve().parents[1] / "configs" / "example.json"


def cfg_text(**sections) -> str:
    return json.dumps(sections)


def test_example_config_parses_and_is_idempotent():
    cfg = parse_config(EXAMPLE)
    text = cfg.to_text()
    again = parse_config_text(text, base_dir=cfg.base_dir)
    assert again.to_text() == text
    assert again.sha256() == cfg.sha256()
    # canonical form is plain JSON with sorted keys and a trailing newline
    assert text.endswith("\n")
    data = json.loads(text)
    assert list(data) == sorted(data)


def test_quantities_normalized_to_si_numbers():
    cfg = parse_config_text(cfg_text(
        cross_sections={"v": {"kind": "circle", "diameter": "10 um"}},
        circuit={"analyses": {}, "netlists": {}}))
    assert cfg.data["cross_sections"]["v"]["diameter"] == pytest.approx(10e-6)
    # plain numbers are accepted as SI values
    cfg2 = parse_config_text(cfg_text(
        cross_sections={"v": {"kind": "circle", "diameter": 10e-6}}))
    assert cfg2.data["cross_sections"]["v"]["diameter"] == pytest.approx(10e-6)


def test_unknown_key_reports_path_and_line():
    text = ('{\n  "materials": {\n    "m": {\n'
            '      "electrical_conductivity": 1.0,\n'
            '      "relative_permittivity": 1.0,\n'
            '      "thermal_conductivity": 1.0,\n'
            '      "volumetric_heat_capacity": 1.0,\n'
            '      "bogus": 2.0\n    }\n  }\n}\n')
    with pytest.raises(ConfigError) as err:
        parse_config_text(text)
    msg = str(err.value)
    assert "materials.m.bogus" in msg
    assert "line 8" in msg


def test_dangling_reference_lists_known_names():
    with pytest.raises(ConfigError, match="unknown material"):
        parse_config_text(cfg_text(vias={"t": {
            "level": 1, "diameter": "50 um", "length": "100 um",
            "material": "unobtainium",
            "connection_thickness": "2 um", "connection_material": "copper",
            "metallization_thickness": "2 um",
            "metallization_material": "copper"}}))
    try:
        parse_config_text(cfg_text(vias={"t": {
            "level": 1, "diameter": "50 um", "length": "100 um",
            "material": "unobtainium",
            "connection_thickness": "2 um", "connection_material": "copper",
            "metallization_thickness": "2 um",
            "metallization_material": "copper"}}))
    except ConfigError as exc:
        assert "known:" in str(exc)
        assert "copper" in str(exc)


def test_json_syntax_error_reports_position():
    with pytest.raises(ConfigError, match=r"line 2"):
        parse_config_text('{\n  "materials": oops\n}')


def test_wrong_dimension_quantity_rejected():
    with pytest.raises(ConfigError, match="diameter"):
        parse_config_text(cfg_text(
            cross_sections={"v": {"kind": "circle", "diameter": "10 K"}}))


def test_frequency_grid_forms():
    def grid_of(spec):
        cfg = parse_config_text(cfg_text(circuit={
            "netlists": {"n": {"text": "V1 a 0 1\nR1 a 0 1\n"}},
            "analyses": {"a": {"netlist": "n", "kind": "ac",
                               "frequencies": spec}}}))
        return build_frequency_grid(
            cfg.data["circuit"]["analyses"]["a"]["frequencies"])

    np.testing.assert_allclose(grid_of([1e3, "2 kHz", 3e3]),
                               [1e3, 2e3, 3e3], rtol=1e-12)
    np.testing.assert_allclose(
        grid_of({"start": "1 kHz", "stop": "1 MHz", "points": 4}),
        np.geomspace(1e3, 1e6, 4), rtol=1e-12)
    with_dc = grid_of({"start": "1 kHz", "stop": "1 MHz", "points": 4,
                       "include_dc": True})
    assert with_dc[0] == 0.0
    np.testing.assert_allclose(with_dc[1:], np.geomspace(1e3, 1e6, 4),
                               rtol=1e-12)
    np.testing.assert_allclose(
        grid_of({"kind": "linear", "start": 10, "stop": 40, "points": 4}),
        [10.0, 20.0, 30.0, 40.0], rtol=1e-12)
    for bad in ([3e3, 2e3], {"start": 1e6, "stop": 1e3, "points": 4},
                {"start": 1e3, "stop": 1e6, "points": 1}):
        with pytest.raises(ConfigError):
            grid_of(bad)


def test_netlist_source_is_file_xor_text():
    with pytest.raises(ConfigError, match="exactly one"):
        parse_config_text(cfg_text(circuit={"netlists": {
            "n": {"file": "a.cir", "text": "R1 a 0 1\n"}}}))
    with pytest.raises(ConfigError, match="exactly one"):
        parse_config_text(cfg_text(circuit={"netlists": {"n": {}}}))


def test_build_mask_from_config():
    cfg = parse_config(EXAMPLE)
    mask = cfg.build_mask("via10")
    area = np.count_nonzero(mask.labels >= 0) * mask.cell_size ** 2
    assert area == pytest.approx(np.pi * (5e-6) ** 2, rel=2e-2)

    base = cfg.build_mask("via10")
    quad = cfg.build_mask("via10_quad")
    # subdivision moves the same conductor cells apart; none are added
    assert (np.count_nonzero(quad.labels >= 0)
            == np.count_nonzero(base.labels >= 0))
    assert quad.nx > base.nx
    assert quad.n_groups == 1
    with pytest.raises(ConfigError, match="unknown cross-section"):
        cfg.build_mask("nope")


def test_build_via_from_config():
    cfg = parse_config(EXAMPLE)
    via = cfg.build_via("tsv")
    assert via.detail_level == 1
    assert via.length == pytest.approx(100e-6)
    assert via.body_material.name == "copper"
    with pytest.raises(ConfigError, match="unknown via"):
        cfg.build_via("nope")


def test_build_stack_from_config():
    cfg = parse_config(EXAMPLE)
    stack = cfg.build_stack("cube3")
    assert len(stack.layers) == 3
    assert len(stack.devices) == 3
    with pytest.raises(ConfigError, match="unknown stack"):
        cfg.build_stack("nope")


def test_defaults_are_materialized():
    cfg = parse_config_text(cfg_text(circuit={
        "netlists": {"n": {"text": "V1 a 0 1\nRT1 a 0 tport=d r0=1 t0=300 "
                                   "alpha=0.001\n"}},
        "etherm": {"e": {"netlist": "n",
                         "conductance_to_ambient": {"d": 0.02}}}}))
    e = cfg.data["circuit"]["etherm"]["e"]
    assert e["ambient"] == 300.0
    assert e["tolerance"] == 1e-3
    assert e["max_iterations"] == 50
    assert e["under_relaxation"] == 1.0


def test_missing_file_raises_io_error():
    with pytest.raises(IOError_):
        parse_config("/nonexistent/config.json")


def test_unknown_scenario_and_material_lookups():
    cfg = parse_config(EXAMPLE)
    with pytest.raises(ConfigError, match="unknown scenario"):
        cfg.scenario("nope")
    with pytest.raises(ConfigError, match="unknown material"):
        cfg.material("nope")
    assert cfg.material("copper").electrical_conductivity > 1e7
    assert "via_resistance" in cfg.scenario_names()
