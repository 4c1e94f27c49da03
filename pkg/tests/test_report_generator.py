"""报告生成测试."""

import json

import pytest

from src.data.models import ExperimentResult
from src.data.report_generator import ReportGenerator


@pytest.fixture
def reporter():
    return ReportGenerator(significant_digits=12)


def _result(**kwargs):
    defaults = dict(
        experiment="demo",
        rows=[{"k": 1, "value": 1 / 3, "ok": True}],
        summary={"mean": 0.5},
        columns=("k", "value", "ok"),
        provenance={"mean": "estimate"},
        passed=True,
    )
    defaults.update(kwargs)
    return ExperimentResult(**defaults)


def test_empty_csv_has_warning_column(reporter):
    assert reporter.render_csv([], ("a", "b")) == "a,b,warning\n"


def test_format_float(reporter):
    assert reporter.format_float(float("nan")) == "nan"
    assert reporter.format_float(float("inf")) == "inf"
    assert reporter.format_float(float("-inf")) == "-inf"
    assert reporter.format_float(1 / 3) == "0.333333333333"


def test_csv_cells(reporter):
    text = reporter.render_csv(_result().rows, ("k", "value", "ok"))
    assert text == "k,value,ok\n1,0.333333333333,true\n"


def test_config_hash_ignores_key_order(reporter):
    assert reporter.config_hash({"a": 1, "b": [1, 2]}) == reporter.config_hash({"b": [1, 2], "a": 1})
    assert reporter.config_hash({"a": 1}) != reporter.config_hash({"a": 2})


def test_emit_report(tmp_path, reporter):
    data_path, manifest_path = reporter.emit_report(_result(), tmp_path, "json", {"seed": 1})
    assert data_path.name == "demo.json"
    payload = json.loads(data_path.read_text(encoding="utf-8"))
    assert payload["rows"][0]["ok"] is True
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    assert manifest["config_sha256"] == reporter.config_hash({"seed": 1})
    assert manifest["quantities"]["mean"] == {"value": 0.5, "provenance": "estimate"}
    assert set(manifest["outputs"]) == {"demo.json"}


def test_emit_report_validates(tmp_path, reporter):
    with pytest.raises(ValueError):
        reporter.emit_report(_result(), tmp_path, "xml")
    with pytest.raises(ValueError):
        reporter.emit_report(_result(provenance={"mean": "guess"}), tmp_path)
