"""Hinge-joint flexion angles measured in a plane with one world axis dropped."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DegenerateProjection, UnknownJoint, ValidationError
from .skeleton import MotionSequence

log = logging.getLogger(__name__)

AXES = "XYZ"
VERTICAL = "vertical"
SOURCE_TAGS = ("reference-native", "reference-skeleton", "estimated-skeleton")
# row order used by the reports
CHANNEL_ORDER = (
    "knee_right",
    "knee_left",
    "ankle_right",
    "ankle_left",
    "back_pelvis",
    "back_t8",
    "elbow_right",
    "elbow_left",
)
_MIN_NORM = 1e-9


def _axis_index(axis) -> int:
    if isinstance(axis, (int, np.integer)) and 0 <= axis < 3:
        return int(axis)
    if isinstance(axis, str) and axis.upper() in AXES:
        return AXES.index(axis.upper())
    raise ValidationError(f"axis must be X, Y or Z, got {axis!r}")


def fold180(angle):
    """Fold degrees onto [0, 180] by reflection (|a| mod 360, then 360 - a above 180)."""
    a = np.mod(np.abs(np.asarray(angle, dtype=float)), 360.0)
    a = np.where(a > 180.0, 360.0 - a, a)
    return float(a) if a.ndim == 0 else a


def _project(v: np.ndarray, axis: int) -> np.ndarray:
    p = np.array(v, dtype=float, copy=True)
    p[..., axis] = 0.0
    return p


def _inplane_angle(u: np.ndarray, v: np.ndarray, axis: int):
    """Unsigned angle (deg) between projections plus a degeneracy mask."""
    pu, pv = _project(u, axis), _project(v, axis)
    nu = np.linalg.norm(pu, axis=-1)
    nv = np.linalg.norm(pv, axis=-1)
    degenerate = (nu <= _MIN_NORM) | (nv <= _MIN_NORM)
    # in-plane cross product reduces to the component along the dropped axis
    cross = np.abs(np.cross(pu, pv)[..., axis])
    dot = np.einsum("...i,...i->...", pu, pv)
    return np.degrees(np.arctan2(cross, dot)), degenerate


def hinge_flexion(u, v, neutralized_axis="Y", neutral_offset: float = 0.0):
    """Flexion between two segment vectors in the plane normal to ``neutralized_axis``.

    Parallel segments give 0 deg. ``neutral_offset`` is subtracted and the result
    folded into [0, 180]. Accepts single vectors or (..., 3) arrays; raises
    :class:`DegenerateProjection` if any projected segment has (near) zero length.
    """
    axis = _axis_index(neutralized_axis)
    angle, degenerate = _inplane_angle(np.asarray(u, float), np.asarray(v, float), axis)
    if np.any(degenerate):
        raise DegenerateProjection(f"segment parallel to the neutralized {AXES[axis]} axis")
    return fold180(angle - neutral_offset)


def vertical_inclination(segment, vertical_axis="Z", neutralized_axis="Y"):
    """Angle in [0, 180] between a segment's in-plane projection and the vertical axis."""
    vert = _axis_index(vertical_axis)
    axis = _axis_index(neutralized_axis)
    if vert == axis:
        raise ValidationError("vertical axis cannot be the neutralized axis")
    seg = np.asarray(segment, dtype=float)
    up = np.zeros(seg.shape)
    up[..., vert] = 1.0
    angle, degenerate = _inplane_angle(seg, up, axis)
    if np.any(degenerate):
        raise DegenerateProjection(f"segment parallel to the neutralized {AXES[axis]} axis")
    return float(angle) if np.ndim(angle) == 0 else angle


@dataclass(frozen=True)
class JointAngleSpec:
    """How one flexion channel is measured.

    ``distal`` is a (from, to) joint pair or the string ``"vertical"``, in which
    case the proximal segment's inclination from ``vertical_axis`` is reported.
    """

    channel: str
    proximal: tuple[str, str]
    distal: tuple[str, str] | str
    neutralized_axis: str = "Y"
    neutral_offset: float = 0.0
    vertical_axis: str = "Z"

    def __post_init__(self):
        object.__setattr__(self, "proximal", tuple(self.proximal))
        if self.distal != VERTICAL:
            object.__setattr__(self, "distal", tuple(self.distal))
        if len(self.proximal) != 2 or self.proximal[0] == self.proximal[1]:
            raise ValidationError(f"{self.channel}: proximal segment needs two distinct joints")
        if self.distal != VERTICAL and (len(self.distal) != 2 or self.distal[0] == self.distal[1]):
            raise ValidationError(f"{self.channel}: distal segment needs two distinct joints")
        _axis_index(self.neutralized_axis)
        _axis_index(self.vertical_axis)

    @property
    def joints(self) -> tuple[str, ...]:
        return self.proximal + (() if self.distal == VERTICAL else self.distal)


def check_specs(specs: Sequence[JointAngleSpec]) -> None:
    names = [s.channel for s in specs]
    dup = {n for n in names if names.count(n) > 1}
    if dup:
        raise ValidationError(f"duplicate channel names: {sorted(dup)}")


@dataclass(frozen=True, eq=False)
class FlexionSeries:
    """A timestamped flexion channel in degrees."""

    channel: str
    t: np.ndarray
    angle: np.ndarray
    source: str = "estimated-skeleton"
    gaps: int = 0

    def __post_init__(self):
        t = np.array(self.t, dtype=float).reshape(-1)
        a = np.array(self.angle, dtype=float).reshape(-1)
        if t.shape != a.shape:
            raise ValidationError(f"{self.channel}: {t.size} timestamps but {a.size} angles")
        if t.size > 1 and np.any(np.diff(t) <= 0):
            raise ValidationError(f"{self.channel}: timestamps must strictly increase")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(t))):
            raise ValidationError(f"{self.channel}: values must be finite")
        if self.source not in SOURCE_TAGS:
            raise ValidationError(f"unknown source tag {self.source!r}")
        t.flags.writeable = False
        a.flags.writeable = False
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "angle", a)

    def __len__(self) -> int:
        return self.t.size

    @property
    def samples(self) -> list[tuple[float, float]]:
        return list(zip(self.t.tolist(), self.angle.tolist()))


def flexion_series(
    seq: MotionSequence,
    specs: Sequence[JointAngleSpec],
    source: str = "estimated-skeleton",
) -> list[FlexionSeries]:
    """One flexion series per spec, computed frame by frame.

    Frames where a segment projects to (near) zero length are left out of that
    channel and counted in its ``gaps``.
    """
    check_specs(specs)
    joints = set(seq.topology.joints)
    for spec in specs:
        for j in spec.joints:
            if j not in joints:
                raise UnknownJoint(j)

    def seg(pair):
        a, b = pair
        return seq.joint_track(b) - seq.joint_track(a)

    out = []
    for spec in specs:
        axis = _axis_index(spec.neutralized_axis)
        u = seg(spec.proximal)
        if spec.distal == VERTICAL:
            vert = _axis_index(spec.vertical_axis)
            v = np.zeros_like(u)
            v[:, vert] = 1.0
            angle, degenerate = _inplane_angle(u, v, axis)
        else:
            angle, degenerate = _inplane_angle(u, seg(spec.distal), axis)
        angle = fold180(angle - spec.neutral_offset)
        keep = ~degenerate
        n_gap = int(degenerate.sum())
        if n_gap:
            log.warning("%s: %d degenerate frame(s) skipped", spec.channel, n_gap)
        out.append(FlexionSeries(spec.channel, seq.times[keep], np.asarray(angle)[keep], source, n_gap))
    return out


def channel_sort_key(channel: str):
    if channel in CHANNEL_ORDER:
        return (0, CHANNEL_ORDER.index(channel), channel)
    return (1, 0, channel)
