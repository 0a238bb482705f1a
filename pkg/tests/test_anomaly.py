import numpy as np
import pytest
from hypothesis import given, strategies as st

from mocapval.anomaly import (
    GENUINE_DISCONTINUITY,
    REPRESENTATION_FLIP,
    EulerSeries,
    canonicalize,
    conjugate,
    detect_flips,
    geodesic_distance,
    max_step,
    principal,
)
from mocapval.errors import TooShort
from mocapval.registration import (
    ALL_CONVENTIONS,
    DEFAULT_CONVENTION,
    EulerAngles,
    euler_array_to_matrix,
    euler_to_rotation,
    random_rotations,
    rotation_distance,
    rotation_to_euler,
    wrap180,
)

from conftest import FLIP_SAMPLE


def series(angles, dt=0.015, conv=DEFAULT_CONVENTION):
    angles = np.asarray(angles, dtype=float)
    return EulerSeries(np.arange(len(angles)) * dt, angles, conv)


def geo_deg(a, b, conv=DEFAULT_CONVENTION):
    return np.degrees(rotation_distance(euler_array_to_matrix(a, conv), euler_array_to_matrix(b, conv)))


def test_geodesic_examples():
    a = EulerAngles(10, 20, 30)
    assert geodesic_distance(a, a) == 0.0
    assert abs(geodesic_distance(EulerAngles(0, 0, 0), EulerAngles(0, 90, 0)) - 90) < 1e-9


@pytest.mark.parametrize("conv", ALL_CONVENTIONS, ids=str)
def test_alternate_branch_is_same_rotation(conv, rng):
    for a in rng.uniform(-180, 180, size=(50, 3)):
        e = EulerAngles.from_array(a)
        alt = EulerAngles.from_array(conjugate(a, conv))
        assert geodesic_distance(e, alt, conv) < 1e-6
        back = rotation_to_euler(euler_to_rotation(alt, conv), conv)
        assert geodesic_distance(e, back, conv) < 1e-6


@given(seed=st.integers(0, 2**31))
def test_geodesic_is_a_metric(seed):
    r = np.random.default_rng(seed)
    a, b, c = (EulerAngles.from_array(v) for v in r.uniform(-180, 180, size=(3, 3)))
    dab, dba = geodesic_distance(a, b), geodesic_distance(b, a)
    assert abs(dab - dba) < 1e-9
    assert 0 <= dab <= 180
    assert dab <= geodesic_distance(a, c) + geodesic_distance(c, b) + 1e-6


def test_recorded_flip_detected_once():
    events = detect_flips(series(FLIP_SAMPLE))
    assert len(events) == 1
    e = events[0]
    assert e.index == 1 and e.kind == REPRESENTATION_FLIP
    assert abs(e.jump[1] - 180) < 1e-9 or abs(e.jump[1] + 180) < 1e-9
    assert abs(e.jump[2] + 179.83) < 1e-9  # 99.41 - (-80.76) = 180.17, wrapped
    assert e.geodesic_deg < 20
    assert e.x_after == 88.37


def test_recorded_flip_repaired():
    s = series(FLIP_SAMPLE)
    fixed, n = canonicalize(s)
    assert n > 0
    assert max_step(fixed) < 30
    assert geo_deg(fixed.angles, s.angles).max() <= 1e-6
    assert not [e for e in detect_flips(fixed) if e.kind == REPRESENTATION_FLIP]


def test_constant_series_has_no_events():
    assert detect_flips(series([[10, 20, 30]] * 5)) == []


def test_slow_rotation_has_no_events():
    t = np.arange(100)
    assert detect_flips(series(np.stack([2.0 * t - 100, 0.5 * t - 25, -t + 40], axis=1))) == []


def test_wraparound_is_not_a_jump():
    assert detect_flips(series([[179, 0, 0], [-179, 0, 0]])) == []


def test_genuine_discontinuity():
    (e,) = detect_flips(series([[0, 0, 0], [0, 0, 120]]))
    assert e.kind == GENUINE_DISCONTINUITY and abs(e.geodesic_deg - 120) < 1e-9


def test_too_short():
    with pytest.raises(TooShort):
        detect_flips(series([[0, 0, 0]]))


def test_continuous_series_unchanged():
    s = series([[10, 20, 30], [12, 21, 29], [14, 22, 28]])
    out, n = canonicalize(s)
    assert n == 0 and np.array_equal(out.angles, s.angles)


def test_single_sample_unchanged():
    s = series([[10, 20, 30]])
    out, n = canonicalize(s)
    assert n == 0 and np.array_equal(out.angles, s.angles)


def test_principal_branch(rng):
    a = rng.uniform(-500, 500, size=(200, 3))
    p = principal(a)
    assert np.all(np.abs(p[:, DEFAULT_CONVENTION.middle_axis]) <= 90)
    assert np.all((p > -180) & (p <= 180))
    assert geo_deg(a, p).max() < 1e-6


def smooth_with_flips(r, conv, n=60):
    """Principal-branch samples of a slow trajectory, some moved to the other branch."""
    mid = conv.middle_axis
    steps = r.uniform(-3, 3, size=(n, 3))
    ang = np.cumsum(steps, axis=0) + r.uniform(-180, 180, size=3)
    # keep well clear of gimbal lock, where Euler angles legitimately race
    ang[:, mid] = 60 * np.sin(np.radians(np.cumsum(steps[:, mid]) + r.uniform(0, 360)))
    ang = principal(wrap180(ang), conv)
    flip = r.random(n) < 0.3
    ang[flip] = wrap180(conjugate(ang[flip], conv))
    return EulerSeries(np.arange(n) * 0.01, ang, conv)


@given(seed=st.integers(0, 2**31), conv=st.sampled_from(ALL_CONVENTIONS))
def test_canonicalize_properties(seed, conv):
    r = np.random.default_rng(seed)
    s = smooth_with_flips(r, conv)
    out, _ = canonicalize(s)
    assert geo_deg(out.angles, s.angles, conv).max() <= 1e-6
    again, n = canonicalize(out)
    assert n == 0 and np.array_equal(again.angles, out.angles)
    assert not [e for e in detect_flips(out) if e.kind == REPRESENTATION_FLIP]
    assert max_step(out) < 30


def test_random_rotations_are_rotations(rng):
    r = random_rotations(rng, 100)
    assert np.allclose(np.einsum("nji,njk->nik", r, r), np.eye(3), atol=1e-12)
    assert np.allclose(np.linalg.det(r), 1)
