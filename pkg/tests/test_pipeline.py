import numpy as np
import pytest

from mocapval.errors import EmptySeries, ValidationError
from mocapval.kinematics import FlexionSeries
from mocapval.pipeline import compare_channels, euler_channel, native_channels

from conftest import FLIP_SAMPLE


def col(name, t, v):
    return FlexionSeries(name, t, v, "reference-native")


def euler_columns(channel, angles, dt=0.015):
    t = np.arange(len(angles)) * dt
    return [col(f"{channel}.{a}", t, angles[:, k]) for k, a in enumerate("xyz")]


def test_euler_backed_channel_without_repair():
    cols = {c.channel: c for c in euler_columns("back_t8", FLIP_SAMPLE)}
    series, n = euler_channel(cols, "back_t8")
    assert n == 0
    assert np.allclose(series.angle, FLIP_SAMPLE[:, 0])


def test_euler_backed_channel_with_repair():
    cols = {c.channel: c for c in euler_columns("back_t8", FLIP_SAMPLE)}
    series, n = euler_channel(cols, "back_t8", component="y", repair=True)
    assert n > 0
    assert np.abs(np.diff(series.angle)).max() < 30
    raw, _ = euler_channel(cols, "back_t8", component="y")
    assert np.abs(np.diff(raw.angle)).max() >= 179


def test_missing_euler_columns():
    cols = {c.channel: c for c in euler_columns("back_t8", FLIP_SAMPLE)[:2]}
    assert euler_channel(cols, "back_t8") is None


def test_native_channels_mix_plain_and_euler():
    plain = col("knee_right", [0, 1], [5, 6])
    out, n = native_channels([plain] + euler_columns("back_t8", FLIP_SAMPLE), ["knee_right", "back_t8", "elbow_left"])
    assert set(out) == {"knee_right", "back_t8"} and n == 0


def test_compare_channels_both_directions():
    native = {"knee_right": col("knee_right", [0, 1, 2], [0, 10, 20])}
    computed = [FlexionSeries("knee_right", [0.5, 1.5], [6, 14], "estimated-skeleton", gaps=1)]
    (c,) = compare_channels(native, computed, max_gap=1.0)
    assert c.paired.t.tolist() == [0.5, 1.5]
    assert c.deviations.tolist() == [1.0, 1.0]
    assert c.paired.gaps == 1
    (r,) = compare_channels(native, computed, max_gap=1.0, interpolate="computed")
    assert r.paired.t.tolist() == [1.0]


def test_compare_channels_skips_unknown_and_rejects_empty():
    native = {"knee_right": col("knee_right", [0, 1], [0, 1])}
    assert compare_channels(native, [FlexionSeries("elbow_left", [0], [1])]) == []
    with pytest.raises(EmptySeries):
        compare_channels(native, [FlexionSeries("knee_right", [], [])])
    with pytest.raises(ValidationError):
        compare_channels(native, [], interpolate="both")
