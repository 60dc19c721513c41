import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import fixture_path, load_fixture
from sheetfk.engine import solve_fk
from sheetfk.fileio import (
    CSV_HEADER,
    ParseError,
    dump_scene_file,
    emit_results,
    parse_results_csv,
    parse_scene_file,
    results_document,
    results_to_csv,
    scene_from_dict,
    scene_to_dict,
    sig,
)
from sheetfk.generators import random_scene
from sheetfk.scene import SceneValidationError


def _doc(**overrides):
    doc = json.loads(fixture_path("example1").read_text())
    doc.update(overrides)
    return doc


def test_centimetre_fixture_is_converted_to_metres():
    scene = load_fixture("table4_n10")
    np.testing.assert_allclose(scene.robots[0], [0.45, 0.14])
    assert scene.z_r == 1.0


@pytest.mark.parametrize("field", ["version", "units", "n", "z_r", "sheet_vertices", "robots"])
def test_missing_field(field):
    doc = _doc()
    del doc[field]
    with pytest.raises(ParseError) as info:
        scene_from_dict(doc)
    assert info.value.where == field


@pytest.mark.parametrize("overrides,where", [
    ({"version": 2}, "version"),
    ({"units": "in"}, "units"),
    ({"n": 4.0}, "n"),
    ({"z_r": "high"}, "z_r"),
    ({"robots": [[0, 0, 0]] * 4}, "robots"),
    ({"robots": "none"}, "robots"),
])
def test_malformed_fields(overrides, where):
    with pytest.raises(ParseError) as info:
        scene_from_dict(_doc(**overrides))
    assert info.value.where == where


def test_unknown_field_rejected():
    with pytest.raises(ParseError, match="unknown field"):
        scene_from_dict(_doc(colour="red"))


def test_invalid_scene_is_not_a_parse_error(tmp_path):
    with pytest.raises(SceneValidationError):
        parse_scene_file(fixture_path("infeasible"))
    with pytest.raises(SceneValidationError):
        scene_from_dict(_doc(n=5))


def test_json_error_location(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{\n  "version": 1,\n  "units": \n}\n')
    with pytest.raises(ParseError) as info:
        parse_scene_file(bad)
    assert info.value.where.endswith(":4:1")
    with pytest.raises(ParseError):
        parse_scene_file(tmp_path / "missing.json")


def test_sig_rounding():
    assert sig(0.1234567891234) == 0.123456789
    assert str(sig(-0.0)) == "0.0"
    assert sig(123456789012.0) == 123456789000.0


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000), st.integers(3, 9), st.sampled_from(["m", "cm", "mm"]))
def test_scene_round_trip(tmp_path_factory, seed, n, units):
    scene = random_scene(np.random.default_rng(seed), n)
    path = tmp_path_factory.mktemp("rt") / "scene.json"
    dump_scene_file(scene, path, units)
    again = parse_scene_file(path)
    np.testing.assert_allclose(again.robots, scene.robots, rtol=1e-8, atol=1e-12)
    np.testing.assert_allclose(again.sheet_vertices, scene.sheet_vertices, rtol=1e-8, atol=1e-12)
    assert scene_to_dict(again, units) == scene_to_dict(scene, units)


def test_csv_and_json_carry_the_same_records():
    scene = load_fixture("example2")
    sols, stats = solve_fk(scene)
    doc = results_document(scene, sols, stats)
    text = results_to_csv(doc)
    assert text.splitlines()[0] == ",".join(CSV_HEADER)
    assert parse_results_csv(text) == json.loads(emit_results(doc, "json"))["solutions"]


def test_solution_record_fields():
    scene = load_fixture("example1")
    sols, stats = solve_fk(scene)
    rec = results_document(scene, sols, stats)["solutions"][0]
    assert rec["taut_set"] == [1, 2, 3]
    assert list(rec["margins"]) == ["4"] and rec["margins"]["4"] > 0
    assert rec["energy_J"] == sig(9.81 * rec["p_o_m"][2])


def test_empty_results_and_timing(tmp_path):
    scene = load_fixture("example1")
    _, stats = solve_fk(scene)
    doc = results_document(scene, [], stats, include_timing=True)
    out = tmp_path / "r.json"
    emit_results(doc, "json", out)
    back = json.loads(out.read_text())
    assert back["solutions"] == [] and "wall_time_s" in back["stats"]
    assert "wall_time_s" not in results_document(scene, [], stats)["stats"]
    assert parse_results_csv(emit_results(doc, "csv")) == []
    with pytest.raises(ValueError):
        emit_results(doc, "xml")
