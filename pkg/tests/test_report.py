import xml.etree.ElementTree as ET

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mocapval.errors import EmptyReport, EmptySeries, ValidationError
from mocapval.report import REPORT_COLUMNS, emit_plot, emit_report, parse_report_csv
from mocapval.skeleton import RecordingMeta
from mocapval.sync import DeviationReport, DeviationStats, ReportRow, group_report

SVG = "{http://www.w3.org/2000/svg}"


def knee_squat_report(**kw):
    row = ReportRow("knee_right", "squat", DeviationStats(0.11, 0.11, 0.30, 120, 0))
    return DeviationReport((row,), "self-consistency", **kw)


def test_csv_row_verbatim():
    text = emit_report(knee_squat_report(), "csv").decode()
    header, row = text.strip().splitlines()
    assert header == ",".join(REPORT_COLUMNS)
    assert row.startswith("knee_right,squat,0.11,0.11,0.30,")
    assert row == "knee_right,squat,0.11,0.11,0.30,120,0"


def test_text_table_verbatim():
    text = emit_report(knee_squat_report(header={"canonicalized": "no"}), "text").decode()
    assert "mode: self-consistency" in text and "canonicalized: no" in text
    row = [line for line in text.splitlines() if line.startswith("knee_right")][0]
    assert row.split() == ["knee_right", "squat", "0.11", "0.11", "0.30", "120", "0"]


def test_empty_report():
    with pytest.raises(EmptyReport):
        emit_report(DeviationReport(()), "csv")


def test_unknown_format():
    with pytest.raises(ValidationError):
        emit_report(knee_squat_report(), "xlsx")


@given(seed=st.integers(0, 2**31), grouped=st.booleans())
def test_csv_parse_back(seed, grouped):
    r = np.random.default_rng(seed)
    recs = [
        (RecordingMeta(exercise=str(r.choice(["squat", "situp"])), clothing=str(r.choice(["a", "b"]))),
         str(r.choice(["knee_right", "elbow_left"])), r.uniform(0, 40, size=int(r.integers(1, 10))).tolist())
        for _ in range(5)
    ]
    rep = group_report(recs, group_by=["clothing"] if grouped else [])
    back = parse_report_csv(emit_report(rep, "csv"))
    assert len(back.rows) == len(rep.rows)
    for a, b in zip(rep.rows, back.rows):
        assert (a.channel, a.exercise) == (b.channel, b.exercise)
        for f in ("median", "average", "maximum"):
            assert getattr(b.stats, f) == float(f"{getattr(a.stats, f):.2f}")
        assert (a.stats.samples, a.stats.gaps) == (b.stats.samples, b.stats.gaps)
        assert tuple((k, str(v)) for k, v in a.groups) == b.groups


def parse_svg(data):
    return ET.fromstring(data)


def test_two_point_series(tmp_path):
    data = emit_plot({"knee_right": ([0.0, 1.0], [0.5, 2.0])}, tmp_path / "p.svg")
    root = parse_svg((tmp_path / "p.svg").read_bytes())
    assert data == (tmp_path / "p.svg").read_bytes()
    lines = root.findall(f".//{SVG}polyline")
    assert len(lines) == 1
    assert len(lines[0].get("points").split()) == 2


def test_three_channels_three_entries():
    t = np.linspace(0, 2, 30)
    root = parse_svg(emit_plot({c: (t, np.abs(np.sin(t + k))) for k, c in enumerate(["a", "b", "c"])}))
    assert len(root.findall(f".//{SVG}polyline")) == 3
    legend = root.find(f".//{SVG}g[@id='legend']")
    assert [e.find(f"{SVG}text").text for e in legend] == ["a", "b", "c"]
    texts = [e.text for e in root.iter(f"{SVG}text")]
    assert "time [s]" in texts and "deviation [°]" in texts


def test_empty_plot():
    with pytest.raises(EmptySeries):
        emit_plot({})
    with pytest.raises(EmptySeries):
        emit_plot({"a": ([], [])})
