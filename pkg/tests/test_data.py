import json
import math
import os

import pytest

from config.settings import DEFAULT_DATA_DIR
from core.errors import SchemaError
from data.data_service import BUNDLED, DataService
from data.file_io import FileIO, dumps_json
from data.morse_schema import parse_morse_data, serialize_morse_data


def _raw(name):
    with open(os.path.join(DEFAULT_DATA_DIR, f"{name}.json"), encoding="utf-8") as f:
        return json.load(f)


def test_bundled_datasets_are_listed():
    assert DataService(data_dir=DEFAULT_DATA_DIR).list_datasets() == list(BUNDLED)


@pytest.mark.parametrize("name", BUNDLED)
def test_bundled_files_match_their_closed_forms(name, test_data):
    from_file = DataService(data_dir=DEFAULT_DATA_DIR).load_morse_data(name)
    built = test_data.load_morse_data(name)
    assert from_file.points == built.points
    assert dict(from_file.flow_counts) == dict(built.flow_counts)
    assert dict(from_file.psi_integrals) == pytest.approx(dict(built.psi_integrals))
    assert from_file.de_rham == built.de_rham
    assert from_file.psi_degree == built.psi_degree


@pytest.mark.parametrize("name", BUNDLED)
def test_bundled_files_are_canonical(name):
    path = os.path.join(DEFAULT_DATA_DIR, f"{name}.json")
    with open(path, encoding="utf-8") as f:
        text = f.read()
    assert dumps_json(serialize_morse_data(parse_morse_data(json.loads(text), name))) == text


BROKEN = {
    "missing key": lambda r: r.pop("psi_closed"),
    "unexpected key": lambda r: r.update(comment="x"),
    "boolean dimension": lambda r: r.update(dimension=True),
    "string closed flag": lambda r: r.update(psi_closed="yes"),
    "fractional count": lambda r: r["flow_counts"][0].update(n=1.5),
    "nan integral": lambda r: r["psi_integrals"][0].update(value=math.nan),
    "duplicate count": lambda r: r["flow_counts"].append(dict(r["flow_counts"][0])),
    "extra field": lambda r: r["critical_points"][0].update(label="min"),
    "empty id": lambda r: r["critical_points"][0].update(id=""),
    "negative tolerance": lambda r: r.update(psi_tolerance=-1.0),
    "index out of range": lambda r: r["critical_points"][0].update(index=3),
    "unknown point": lambda r: r["flow_counts"][0].update(to="q"),
    "short de Rham lists": lambda r: r["de_rham"].update(betti=[1, 0]),
}


@pytest.mark.parametrize("case", sorted(BROKEN))
def test_schema_errors(case):
    raw = _raw("s2_quadratic")
    BROKEN[case](raw)
    with pytest.raises(SchemaError):
        parse_morse_data(raw, "broken")


def test_top_level_must_be_an_object():
    with pytest.raises(SchemaError):
        parse_morse_data([_raw("s2_quadratic")])


def test_missing_de_rham_is_allowed():
    raw = _raw("t2_perfect_dtheta")
    del raw["de_rham"]
    assert parse_morse_data(raw).de_rham is None


def test_save_and_load(tmp_path, test_data):
    service = DataService(base_dir=str(tmp_path), data_dir=DEFAULT_DATA_DIR)
    service.save_morse_data(test_data.load_morse_data("t2_perfect_dtheta"), "t2.json")
    loaded = service.load_morse_data("t2.json")
    assert loaded.name == "t2"
    assert dict(loaded.psi_integrals) == {("a", "min"): 2 * math.pi, ("b", "min"): 0.0,
                                          ("max", "a"): 0.0, ("max", "b"): 2 * math.pi}


def test_unknown_source(tmp_path):
    service = DataService(base_dir=str(tmp_path), data_dir=DEFAULT_DATA_DIR)
    with pytest.raises(SchemaError):
        service.load_morse_data("no_such_dataset")


def test_file_io(tmp_path):
    file_io = FileIO(str(tmp_path))
    assert file_io.read_json("missing.json", default={}) == {}
    (tmp_path / "bad.json").write_text("{not json", encoding="utf-8")
    with pytest.raises(SchemaError):
        file_io.read_json("bad.json")
    file_io.write_json({"b": 1, "a": [1, 2]}, "nested/out.json")
    assert (tmp_path / "nested" / "out.json").read_text(encoding="utf-8") == dumps_json({"a": [1, 2], "b": 1})
    assert file_io.list_json("nested") == ["out"]
