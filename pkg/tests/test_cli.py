import csv

import numpy as np
import pytest

from mocapval.cli import main
from mocapval.io import read_angle_stream, read_euler_stream, write_euler_stream
from mocapval.anomaly import EulerSeries

from conftest import FLIP_SAMPLE


@pytest.fixture
def synth_dir(tmp_path):
    out = tmp_path / "synth"
    rc = main(["synth", "--out", str(out), "--channels", "knee_right,ankle_left,back_t8",
               "--amplitude", "70", "--repetitions", "2", "--yaw-deg", "35", "--offset", "1", "2", "0",
               "--scale", "1.3"])
    assert rc == 0
    return out


def test_synth_outputs(synth_dir):
    for name in ("truth.csv", "reference.jsonl", "estimated.jsonl", "manifest.yaml"):
        assert (synth_dir / name).is_file()


def test_validate(synth_dir, capsys):
    files = [str(synth_dir / n) for n in ("truth.csv", "reference.jsonl", "estimated.jsonl", "manifest.yaml")]
    assert main(["validate", *files]) == 0
    assert capsys.readouterr().out.count("ok ") == 4


def test_validate_bad_file_exit_1(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("time_s,a\n0,abc\n")
    assert main(["validate", str(bad)]) == 1
    assert "line 2" in capsys.readouterr().err


def test_compare_recovers_truth(synth_dir, tmp_path, capsys):
    out = tmp_path / "report"
    assert main(["compare", "--manifest", str(synth_dir / "manifest.yaml"), "--out", str(out), "--plot"]) == 0
    rows = list(csv.DictReader((out / "report.csv").open()))
    assert [r["joint"] for r in rows] == ["knee_right", "ankle_left", "back_t8"]
    assert all(float(r["maximum_deg"]) == 0.0 for r in rows)
    assert (out / "report.txt").is_file()
    assert list(out.glob("*.svg"))
    assert "canonicalized: no" in capsys.readouterr().out


def test_compare_self_consistency(synth_dir, capsys):
    assert main(["compare", "--manifest", str(synth_dir / "manifest.yaml"), "--mode", "self-consistency"]) == 0
    assert "mode: self-consistency" in capsys.readouterr().out


def test_compare_empty_group_exit_2(synth_dir):
    rc = main(["compare", "--manifest", str(synth_dir / "manifest.yaml"), "--group-by", "clothing=jacket"])
    assert rc == 2


def test_compare_needs_inputs():
    assert main(["compare"]) == 1


def test_angles(synth_dir, tmp_path):
    out = tmp_path / "angles.csv"
    rc = main(["angles", str(synth_dir / "estimated.jsonl"), "--reference", str(synth_dir / "reference.jsonl"),
               "--out", str(out)])
    assert rc == 0
    got = {s.channel: s for s in read_angle_stream(out)}
    truth = {s.channel: s for s in read_angle_stream(synth_dir / "truth.csv")}
    for ch, s in truth.items():
        assert np.abs(got[ch].angle - s.angle).max() < 1e-6


def test_anomalies(tmp_path, capsys):
    src = tmp_path / "euler.csv"
    write_euler_stream(EulerSeries(np.arange(8) * 0.015, FLIP_SAMPLE), src)
    assert main(["anomalies", str(src), "--out", str(tmp_path / "a")]) == 0
    assert "representation-flip" in capsys.readouterr().out
    fixed = read_euler_stream(tmp_path / "a" / "repaired.csv")
    assert np.abs(np.diff(fixed.angles, axis=0)).max() < 30


def test_usage_error_exit_1():
    with pytest.raises(SystemExit) as err:
        main(["compare", "--mode", "bogus"])
    assert err.value.code == 1


def test_bad_convention_exit_1(tmp_path):
    src = tmp_path / "euler.csv"
    write_euler_stream(EulerSeries(np.arange(8) * 0.015, FLIP_SAMPLE), src)
    assert main(["anomalies", str(src), "--convention", "XXY"]) == 1
