import json

import numpy as np
from hypothesis import given
from hypothesis import strategies as st

from ump.io import atomic_write_text, csv_text, format_float, read_csv, svg_polylines, write_csv, write_json


def test_format_float():
    assert format_float(0.1) == "0.10000000000000001"
    assert format_float(True) == "1"
    assert format_float(7) == "7"
    assert format_float("abc") == "abc"
    assert format_float(np.float64(1 / 3)) == "0.33333333333333331"


@given(st.lists(st.floats(allow_nan=False, allow_infinity=False), min_size=1, max_size=20))
def test_csv_round_trip(values):
    text = csv_text(["i", "x"], enumerate(values))
    lines = text.splitlines()
    assert lines[0] == "i,x"
    assert [float(l.split(",")[1]) for l in lines[1:]] == values


def test_write_read_csv(tmp_path):
    path = tmp_path / "a.csv"
    write_csv(path, ["x", "name"], [[1.5, "p"], [2.0, "q"]])
    header, rows = read_csv(path)
    assert header == ["x", "name"]
    assert rows == [[1.5, "p"], [2.0, "q"]]
    assert not list(tmp_path.glob("*.tmp*"))


def test_write_json_sorted(tmp_path):
    path = tmp_path / "a.json"
    write_json(path, {"b": 1, "a": [1.0, 2.0]})
    assert json.loads(path.read_text()) == {"a": [1.0, 2.0], "b": 1}
    assert path.read_text().index('"a"') < path.read_text().index('"b"')


def test_atomic_overwrite(tmp_path):
    path = tmp_path / "f.txt"
    atomic_write_text(path, "one")
    atomic_write_text(path, "two")
    assert path.read_text() == "two"
    assert [p.name for p in tmp_path.iterdir()] == ["f.txt"]


def test_svg():
    x = np.linspace(0, 1, 5)
    svg = svg_polylines({"a": (x, x**2), "b": (x, -x)}, title="t", xlabel="x", ylabel="y")
    assert svg.startswith("<svg") and svg.rstrip().endswith("</svg>")
    assert svg.count("<polyline") == 2
