import json

import numpy as np

from fields import Chart
from report_writer import ReportWriter, summarize, write_json, write_obj, write_scalar_csv, write_vector_csv
from surface_lang import catalog, sample_surface


def test_obj_has_one_vertex_per_node_and_two_faces_per_quad(tmp_path):
    plane = sample_surface(catalog("plane"), Chart((-1.0, 1.0), (-1.0, 1.0), (3, 3)))
    lines = open(write_obj(str(tmp_path / "plane.obj"), plane)).read().splitlines()
    vertices = [l for l in lines if l.startswith("v ")]
    faces = [l for l in lines if l.startswith("f ")]
    assert len(vertices) == 9
    assert len(faces) == 8
    assert faces[:2] == ["f 1 2 5", "f 1 5 4"]
    assert vertices[0] == "v -1 -1 0"


def test_csv_values_reparse_exactly(tmp_path):
    chart = Chart((0.0, 1.0), (0.0, 2.0), (4, 5))
    values = np.random.default_rng(7).normal(size=chart.shape)
    path = write_scalar_csv(str(tmp_path / "K.csv"), chart, values, header="K")
    lines = open(path).read().splitlines()
    assert lines[0] == "u1,u2,K"
    parsed = np.array([[float(x) for x in line.split(",")] for line in lines[1:]])
    np.testing.assert_array_equal(parsed[:, 2].reshape(chart.shape), values)
    u1, u2 = chart.mesh()
    np.testing.assert_array_equal(parsed[:, 0], u1.ravel())
    np.testing.assert_array_equal(parsed[:, 1], u2.ravel())


def test_vector_csv_headers(tmp_path):
    chart = Chart((0.0, 1.0), (0.0, 1.0), (3, 3))
    path = write_vector_csv(str(tmp_path / "eps.csv"), chart, np.zeros(chart.shape + (2,)), ("eps1", "eps2"))
    lines = open(path).read().splitlines()
    assert lines[0] == "u1,u2,eps1,eps2"
    assert len(lines) == 10


def test_json_is_sorted_deterministic_and_nan_free(tmp_path):
    data = {"b": np.float64(np.nan), "a": np.arange(3), "c": {"flag": np.bool_(True), "x": np.inf}}
    first = write_json(str(tmp_path / "one.json"), data)
    second = write_json(str(tmp_path / "two.json"), data)
    text = open(first).read()
    assert text == open(second).read()
    assert json.loads(text) == {"a": [0, 1, 2], "b": None, "c": {"flag": True, "x": None}}
    assert text.index('"a"') < text.index('"b"') < text.index('"c"')


def test_summarize_skips_masked_and_non_finite():
    values = np.array([1.0, np.nan, 3.0, 10.0])
    summary = summarize(values, mask=np.array([False, False, False, True]))
    assert summary == {"min": 1.0, "max": 3.0, "mean": 2.0, "count": 2}
    assert summarize(np.array([np.nan]))["count"] == 0


def test_report_writer_creates_directory_and_tracks_files(tmp_path):
    writer = ReportWriter(str(tmp_path / "out" / "run"))
    path = writer.json("summary.json", {"ok": True})
    assert path.endswith("summary.json")
    assert writer.written == [path]
    assert json.loads(open(path).read()) == {"ok": True}
