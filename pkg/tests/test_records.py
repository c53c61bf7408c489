import csv
import json
import math

import numpy as np

from hofa.records import ResultRecord, canonical_json, config_hash, dump, write_csv


def test_config_hash_ignores_key_order():
    assert config_hash({"a": 1, "b": [1, 2]}) == config_hash({"b": [1, 2], "a": 1})
    assert config_hash({"a": 1}) != config_hash({"a": 2})
    assert len(config_hash({})) == 16


def test_plain_conversion():
    text = canonical_json({"x": np.int64(3), "y": np.array([1.5, math.inf]), "z": 1 + 2j, "t": (1, 2)})
    assert json.loads(text) == {"t": [1, 2], "x": 3, "y": [1.5, "inf"], "z": [1.0, 2.0]}


def test_record_omits_wall_time_unless_asked():
    r = ResultRecord("e", {"seed": 1}, {"m": 1.0}, None, 0.25)
    assert "wall_time" not in r.to_json()
    assert r.to_json(timing=True)["wall_time"] == 0.25
    assert r.to_json()["config_hash"] == config_hash({"seed": 1})


def test_dump_is_stable(tmp_path):
    obj = {"b": 1, "a": [np.float64(0.5)]}
    p = tmp_path / "sub" / "o.json"
    dump(obj, p)
    first = p.read_bytes()
    dump(obj, p)
    assert p.read_bytes() == first and first.endswith(b"\n")


def test_csv_fixed_columns(tmp_path):
    recs = [
        ResultRecord("a", {"s": 1}, {"z": 1, "b": 2.0}).to_json(),
        ResultRecord("b", {"s": 2}, {"b": 3.0, "nested": [1]}).to_json(),
    ]
    cols = write_csv(recs, tmp_path / "o.csv")
    assert cols == ["experiment", "config_hash", "b", "z"]
    rows = list(csv.reader(open(tmp_path / "o.csv")))
    assert rows[0] == cols and rows[2][3] == ""
