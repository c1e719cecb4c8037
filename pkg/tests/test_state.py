"""Tests for artifact files and their sidecars."""

import json

import numpy as np
import pytest

from g2flow import __version__
from g2flow.instanton.models import InstantonInit
from g2flow.state.artifacts import ArtifactWriter, format_value


def test_format_value():
    assert format_value(0.1) == "0.10000000000000001"
    assert format_value(np.float64(1.5)) == "1.5"
    assert format_value(3) == "3"
    assert format_value(True) == "1"
    assert format_value(None) == ""
    assert format_value(float("nan")) == "nan"
    assert format_value(-float("inf")) == "-inf"
    assert format_value("abelian") == "abelian"


def test_csv_with_sidecar(tmp_path):
    writer = ArtifactWriter(str(tmp_path / "out"), "abc123")
    target = writer.write_csv("table.csv", ["x", "y"], [(1, 0.5), (2, None)], {"note": "demo"})
    assert target.read_text() == "x,y\n1,0.5\n2,\n"
    sidecar = json.loads((tmp_path / "out" / "table.json").read_text())
    assert sidecar["config_hash"] == "abc123"
    assert sidecar["g2flow_version"] == __version__
    assert sidecar["columns"] == ["x", "y"]
    assert sidecar["rows"] == 2
    assert sidecar["note"] == "demo"
    assert writer.load_sidecar("table.csv") == sidecar


def test_row_length_mismatch(tmp_path):
    writer = ArtifactWriter(str(tmp_path), "h")
    with pytest.raises(ValueError):
        writer.write_csv("bad.csv", ["x", "y"], [(1,)])


def test_json_tables(tmp_path):
    writer = ArtifactWriter(str(tmp_path), "h", fmt="json")
    target = writer.write_table("tab", ["a", "b"], [(np.float64(1.0), "ok")])
    assert target.name == "tab.rows.json"
    assert json.loads(target.read_text()) == [{"a": 1.0, "b": "ok"}]
    assert writer.load_sidecar("tab.json")["rows"] == 1


def test_unknown_format(tmp_path):
    with pytest.raises(ValueError):
        ArtifactWriter(str(tmp_path), "h", fmt="xml")


def test_plot_data(tmp_path):
    writer = ArtifactWriter(str(tmp_path), "h")
    target = writer.write_text("region.dat", [(0.5, 1.25, 3)])
    assert target.read_text() == "0.5 1.25 3\n"
    assert writer.written == [target, tmp_path / "region.dat.json"]


def test_plot_data_sidecar_keeps_csv_sidecar(tmp_path):
    writer = ArtifactWriter(str(tmp_path), "abc")
    writer.write_csv("region.csv", ["f1"], [(0.5,)], {"kind": "table"})
    writer.write_text("region.dat", [(0.5, 1.25, 3)], sidecar={"columns": ["f1", "g1", "code"]})
    plot = writer.load_sidecar("region.dat.json")
    assert plot["config_hash"] == "abc"
    assert plot["rows"] == 1
    assert plot["columns"] == ["f1", "g1", "code"]
    assert writer.load_sidecar("region.csv")["kind"] == "table"


def test_sidecar_values(tmp_path):
    writer = ArtifactWriter(str(tmp_path), "h")
    writer.write_sidecar("m.csv", {"arr": np.array([1.0, 2.0]), "init": InstantonInit(f1=1.0, g1=2.0)})
    data = writer.load_sidecar("m.csv")
    assert data["arr"] == [1.0, 2.0]
    assert data["init"] == {"f1": 1.0, "g1": 2.0}


def test_missing_sidecar(tmp_path):
    writer = ArtifactWriter(str(tmp_path), "h")
    assert writer.load_sidecar("metric.csv") is None
    (tmp_path / "broken.json").write_text("{not json")
    assert writer.load_sidecar("broken.csv") is None
