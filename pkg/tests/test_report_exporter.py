"""Output files."""
import csv
import json

import numpy as np

from singular_src.services.report_exporter import (
    CHECK_COLUMNS,
    PROFILE_COLUMNS,
    ReportExporter,
    check_summary,
    prepare_output,
)
from singular_src.services.states import CheckReport, GridFunction


def _checks():
    return [
        CheckReport(check_name="comparison", passed=True, measured=[0.0], expected=[0.0], tolerance=1e-3,
                    context="abc", detail="min interior gap 1.0e-02"),
        CheckReport(check_name="hopf", passed=False, measured=[0.5, 0.6], expected=[1.0], tolerance=0.2),
        CheckReport(check_name="tau1", passed=None, measured=[0.98], expected=[1.0]),
    ]


def test_profile_csv_columns(tmp_path, make_problem, unit_mesh):
    x = unit_mesh(5)
    profile = GridFunction(nodes=x, values=x * (1.0 - x))
    path = ReportExporter.write_profile_csv(str(tmp_path / "profile.csv"), make_problem(), profile)
    with open(path, newline="", encoding="utf-8") as f:
        rows = list(csv.reader(f))
    assert rows[0] == PROFILE_COLUMNS
    assert len(rows) == 6
    assert float(rows[3][1]) == 0.25
    assert float(rows[1][3]) == 0.0


def test_profile_residual_left_empty_for_nonpositive_profile(tmp_path, make_problem, unit_mesh):
    x = unit_mesh(5)
    profile = GridFunction(nodes=x, values=-x * (1.0 - x))
    rows = ReportExporter.profile_rows(make_problem(), profile)
    assert all(row[3] == "" for row in rows)


def test_float_format_is_reproducible(tmp_path):
    value = 0.1 + 0.2
    path = ReportExporter.write_csv(str(tmp_path / "t.csv"), ["v", "flag"], [[value, True]])
    with open(path, encoding="utf-8") as f:
        lines = f.read().splitlines()
    assert lines == ["v,flag", "0.30000000000000004,true"]


def test_checks_csv(tmp_path):
    path = ReportExporter.write_checks_csv(str(tmp_path / "checks.csv"), _checks())
    with open(path, newline="", encoding="utf-8") as f:
        rows = list(csv.reader(f))
    assert rows[0] == CHECK_COLUMNS
    assert rows[2] == ["hopf", "false", "0.5;0.59999999999999998", "1", "0.20000000000000001"]
    assert rows[3][1] == ""


def test_summary_json_is_strict(tmp_path):
    payload = {"b": np.float64(np.inf), "a": np.arange(3), "nested": {"x": float("nan")}}
    path = ReportExporter.write_summary_json(str(tmp_path / "summary.json"), payload)
    with open(path, encoding="utf-8") as f:
        text = f.read()
    data = json.loads(text)
    assert data == {"a": [0, 1, 2], "b": "inf", "nested": {"x": "nan"}}
    assert text.index('"a"') < text.index('"b"')


def test_markdown_rendering():
    md = ReportExporter.export_checks_markdown(_checks(), title="Battery", metadata={"alpha": 0.0})
    assert md.startswith("# Battery\n")
    assert "alpha: 0.0" in md
    assert "| comparison | pass |" in md
    assert "| hopf | FAIL |" in md
    assert "| tau1 | info |" in md
    assert "- **comparison**: min interior gap" in md


def test_output_directory_created(tmp_path):
    path = prepare_output(str(tmp_path), "verify")
    assert path.endswith("verify")
    assert (tmp_path / "verify").is_dir()
    assert ReportExporter.sanitize_filename('a b:"c"') == "a_bc"


def test_check_summary_drops_context():
    summary = check_summary(_checks())
    assert "context" not in summary[0]
    assert summary[2]["passed"] is None
