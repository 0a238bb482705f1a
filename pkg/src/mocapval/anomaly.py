"""Detection and repair of Euler-branch flips in orientation streams.

A Tait-Bryan triple (first, middle, last) and its conjugate
(first + 180, 180 - middle, last + 180) describe the same rotation. Streams that
always report the principal branch (middle angle within +-90) jump between the
two whenever the middle angle passes +-90, although the body barely moved.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import TooShort, ValidationError
from .registration import (
    DEFAULT_CONVENTION,
    EulerAngles,
    RotationConvention,
    euler_array_to_matrix,
    rotation_distance,
    wrap180,
)

REPRESENTATION_FLIP = "representation-flip"
GENUINE_DISCONTINUITY = "genuine-discontinuity"
DEFAULT_JUMP_THRESHOLD = 90.0
DEFAULT_FLIP_TOLERANCE = 20.0


@dataclass(frozen=True, eq=False)
class EulerSeries:
    """Timestamps (T,) and xyz angles (T, 3) in degrees under one convention."""

    t: np.ndarray
    angles: np.ndarray
    convention: RotationConvention = DEFAULT_CONVENTION

    def __post_init__(self):
        t = np.array(self.t, dtype=float).reshape(-1)
        ang = np.array(self.angles, dtype=float).reshape(-1, 3)
        if ang.shape[0] != t.size:
            raise ValidationError(f"{t.size} timestamps but {ang.shape[0]} angle triples")
        if t.size > 1 and np.any(np.diff(t) <= 0):
            raise ValidationError("timestamps must strictly increase")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(ang))):
            raise ValidationError("Euler series values must be finite")
        t.flags.writeable = False
        ang.flags.writeable = False
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "angles", ang)

    @classmethod
    def from_samples(cls, samples: Sequence[tuple[float, EulerAngles]], convention=DEFAULT_CONVENTION):
        return cls([s[0] for s in samples], [s[1].as_array() for s in samples], convention)

    def __len__(self) -> int:
        return self.t.size

    @property
    def samples(self) -> list[tuple[float, EulerAngles]]:
        return [(float(t), EulerAngles.from_array(a)) for t, a in zip(self.t, self.angles)]

    def matrices(self) -> np.ndarray:
        return euler_array_to_matrix(self.angles, self.convention)


@dataclass(frozen=True)
class AnomalyEvent:
    """A transition ``index -> index + 1`` where some axis jumped."""

    index: int
    t_before: float
    t_after: float
    jump: tuple[float, float, float]
    geodesic_deg: float
    kind: str
    x_after: float

    @property
    def max_jump(self) -> float:
        return max(abs(j) for j in self.jump)


def geodesic_distance(a: EulerAngles, b: EulerAngles, c: RotationConvention = DEFAULT_CONVENTION) -> float:
    """Angle in degrees of the relative rotation between two orientations."""
    ra = euler_array_to_matrix(a.as_array(), c)
    rb = euler_array_to_matrix(b.as_array(), c)
    return float(np.degrees(rotation_distance(ra, rb)))


def detect_flips(
    s: EulerSeries,
    jump_threshold: float = DEFAULT_JUMP_THRESHOLD,
    flip_tolerance: float = DEFAULT_FLIP_TOLERANCE,
) -> list[AnomalyEvent]:
    """Transitions where an axis jumps by at least ``jump_threshold`` degrees.

    Jumps are wrapped into (-180, 180] first, so 179 -> -179 is a 2 degree step.
    An event is a representation flip when the underlying rotation moved at
    most ``flip_tolerance`` degrees, otherwise a genuine discontinuity.
    """
    if len(s) < 2:
        raise TooShort(f"need at least 2 samples, got {len(s)}")
    jumps = wrap180(np.diff(s.angles, axis=0))
    flagged = np.flatnonzero(np.any(np.abs(jumps) >= jump_threshold, axis=1))
    if flagged.size == 0:
        return []
    mats = s.matrices()
    geo = np.degrees(rotation_distance(mats[flagged], mats[flagged + 1]))
    events = []
    for i, g in zip(flagged.tolist(), geo.tolist()):
        events.append(
            AnomalyEvent(
                index=i,
                t_before=float(s.t[i]),
                t_after=float(s.t[i + 1]),
                jump=tuple(float(v) for v in jumps[i]),
                geodesic_deg=g,
                kind=REPRESENTATION_FLIP if g <= flip_tolerance else GENUINE_DISCONTINUITY,
                x_after=float(s.angles[i + 1, 0]),
            )
        )
    return events


def conjugate(angles: np.ndarray, convention: RotationConvention = DEFAULT_CONVENTION) -> np.ndarray:
    """The other Tait-Bryan branch of (..., 3) xyz angles."""
    out = np.array(angles, dtype=float, copy=True)
    mid = convention.middle_axis
    for ax in range(3):
        if ax == mid:
            out[..., ax] = 180.0 - out[..., ax]
        else:
            out[..., ax] = out[..., ax] + 180.0
    return out


def principal(angles: np.ndarray, convention: RotationConvention = DEFAULT_CONVENTION) -> np.ndarray:
    """Branch with the middle angle in [-90, 90], every angle in (-180, 180]."""
    a = wrap180(np.asarray(angles, dtype=float))
    mid = convention.middle_axis
    flip = np.abs(a[..., mid]) > 90.0
    return np.where(flip[..., None], wrap180(conjugate(a, convention)), a)


def _unwrap_toward(values: np.ndarray, ref: np.ndarray) -> np.ndarray:
    return values + 360.0 * np.round((ref - values) / 360.0)


def canonicalize(s: EulerSeries) -> tuple[EulerSeries, int]:
    """Re-express every sample on the branch closest to its predecessor.

    For each sample the candidates are the sample itself and its conjugate, each
    unwrapped per axis by multiples of 360 toward the previous output; the one
    with the smallest largest per-axis step wins (ties keep the input branch).
    The first sample is put on the principal branch. Returns the new series and
    the number of samples whose numbers changed.
    """
    if len(s) == 0:
        return s, 0
    conv = s.convention
    src = s.angles
    out = np.empty_like(src)
    out[0] = principal(src[0], conv)
    for i in range(1, len(src)):
        prev = out[i - 1]
        own = _unwrap_toward(src[i], prev)
        alt = _unwrap_toward(conjugate(src[i], conv), prev)
        if np.abs(alt - prev).max() < np.abs(own - prev).max():
            out[i] = alt
        else:
            out[i] = own
    changed = int(np.sum(np.any(np.abs(out - src) > 1e-9, axis=1)))
    return EulerSeries(s.t, out, conv), changed


def max_step(s: EulerSeries) -> float:
    """Largest raw per-axis change between consecutive samples."""
    if len(s) < 2:
        return 0.0
    return float(np.abs(np.diff(s.angles, axis=0)).max())
