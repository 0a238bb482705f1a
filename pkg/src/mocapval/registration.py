"""Normalization, anchor-based rigid registration and Euler-angle conversion.

Angles in :class:`EulerAngles` are keyed by axis (x, y, z), not by position in
the rotation sequence; the :class:`RotationConvention` decides the order in
which the three single-axis rotations are composed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import CollinearAnchors, DegenerateFrame, NotARotation, ValidationError
from .skeleton import MotionSequence, SkeletonFrame

AXES = "XYZ"
_LOCK_TOL = 1e-9  # cos(middle angle) below which we call it gimbal lock


# ---------------------------------------------------------------------------
# rigid transforms
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class RigidTransform:
    """``p -> scale * rotation @ p + translation``."""

    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))
    scale: float = 1.0

    def __post_init__(self):
        r = np.array(self.rotation, dtype=float).reshape(3, 3)
        t = np.array(self.translation, dtype=float).reshape(3)
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise ValidationError(f"scale must be positive and finite, got {self.scale}")
        if np.abs(r.T @ r - np.eye(3)).max() > 1e-9 or abs(np.linalg.det(r) - 1.0) > 1e-9:
            raise NotARotation("rotation must be orthonormal with det +1")
        r.flags.writeable = False
        t.flags.writeable = False
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)
        object.__setattr__(self, "scale", float(self.scale))

    @classmethod
    def identity(cls) -> "RigidTransform":
        return cls()

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Transform an (..., 3) array of points."""
        return self.scale * np.asarray(points, dtype=float) @ self.rotation.T + self.translation

    def inverse(self) -> "RigidTransform":
        r_inv = self.rotation.T
        return RigidTransform(r_inv, -(r_inv @ self.translation) / self.scale, 1.0 / self.scale)


def compose(second: RigidTransform, first: RigidTransform) -> RigidTransform:
    """Transform equivalent to applying ``first`` and then ``second``."""
    rot = second.rotation @ first.rotation
    # re-orthonormalize so long chains stay within the 1e-9 invariant
    u, _, vt = np.linalg.svd(rot)
    rot = u @ vt
    return RigidTransform(
        rot,
        second.scale * second.rotation @ first.translation + second.translation,
        second.scale * first.scale,
    )


def apply_transform(frame: SkeletonFrame, t: RigidTransform) -> SkeletonFrame:
    return SkeletonFrame(frame.t, frame.joints, t.apply(frame.xyz))


# ---------------------------------------------------------------------------
# normalization
# ---------------------------------------------------------------------------


def _normalization_params(xyz: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Centroids (..., 3) and RMS radii (...) over the joint axis (-2)."""
    centroid = xyz.mean(axis=-2)
    rms = np.sqrt(np.mean(np.sum((xyz - centroid[..., None, :]) ** 2, axis=-1), axis=-1))
    return centroid, rms


def normalize(frame: SkeletonFrame) -> tuple[SkeletonFrame, RigidTransform]:
    """Center a frame on its joint centroid and scale it to unit RMS radius.

    Returns the normalized frame and the transform that produced it.
    """
    centroid, rms = _normalization_params(frame.xyz)
    if len(frame.joints) < 2 or not rms > 1e-12 * max(1.0, np.abs(centroid).max()):
        raise DegenerateFrame("all joints coincide; scale is undefined")
    s = 1.0 / rms
    transform = RigidTransform(np.eye(3), -s * centroid, s)
    return SkeletonFrame(frame.t, frame.joints, (frame.xyz - centroid) * s), transform


def normalize_sequence(seq: MotionSequence) -> MotionSequence:
    """Per-frame :func:`normalize` over a whole sequence."""
    centroid, rms = _normalization_params(seq.xyz)
    bad = ~(rms > 1e-12 * np.maximum(1.0, np.abs(centroid).max(axis=-1)))
    if seq.xyz.shape[1] < 2 or np.any(bad):
        k = int(np.argmax(bad)) if np.any(bad) else 0
        raise DegenerateFrame(f"frame {k}: all joints coincide; scale is undefined")
    return seq.replace(xyz=(seq.xyz - centroid[:, None, :]) / rms[:, None, None])


# ---------------------------------------------------------------------------
# anchor registration
# ---------------------------------------------------------------------------


def rigid_align_batch(source: np.ndarray, target: np.ndarray, with_scale: bool = False):
    """Least-squares similarity fit for a batch of corresponding point sets.

    Parameters
    ----------
    source, target : ndarray, shape (N, K, 3)
        Corresponding points; frame ``n`` of ``source`` is fit onto frame ``n`` of ``target``.
    with_scale : bool
        Also estimate a uniform scale (Umeyama); otherwise scale is fixed to 1.

    Returns
    -------
    rotation (N, 3, 3), translation (N, 3), scale (N,), residual (N,)
        ``residual`` is the sum of squared distances after alignment.
    """
    src = np.asarray(source, dtype=float)
    dst = np.asarray(target, dtype=float)
    if src.shape != dst.shape or src.ndim != 3 or src.shape[-1] != 3:
        raise ValidationError(f"anchor arrays must both be (N, K, 3); got {src.shape} and {dst.shape}")
    mu_s = src.mean(axis=1)
    mu_d = dst.mean(axis=1)
    a = src - mu_s[:, None]
    b = dst - mu_d[:, None]

    sv_a = np.linalg.svd(a, compute_uv=False)
    collinear = sv_a[:, 1] <= 1e-9 * np.maximum(sv_a[:, 0], 1e-300)
    if np.any(collinear):
        k = int(np.argmax(collinear))
        raise CollinearAnchors(
            f"source anchors of set {k} are collinear; rotation about their line is undetermined"
        )

    h = np.einsum("nki,nkj->nij", a, b)
    u, sig, vt = np.linalg.svd(h)
    d = np.sign(np.linalg.det(np.einsum("nji,nkj->nik", vt, u)))
    d[d == 0] = 1.0
    dmat = np.ones((len(d), 3))
    dmat[:, 2] = d
    rot = np.einsum("nji,nj,nkj->nik", vt, dmat, u)

    if with_scale:
        var_a = np.einsum("nki,nki->n", a, a)
        scale = np.einsum("nj,nj->n", sig, dmat) / var_a
    else:
        scale = np.ones(len(rot))
    trans = mu_d - scale[:, None] * np.einsum("nij,nj->ni", rot, mu_s)
    fitted = scale[:, None, None] * np.einsum("nij,nkj->nki", rot, src) + trans[:, None]
    residual = np.sum((fitted - dst) ** 2, axis=(1, 2))
    return rot, trans, scale, residual


def _anchor_array(anchors, labels=None) -> tuple[np.ndarray, list]:
    if isinstance(anchors, Mapping):
        labels = list(anchors) if labels is None else labels
        return np.array([anchors[k] for k in labels], dtype=float), labels
    return np.asarray(anchors, dtype=float), labels


def rigid_align(source, target, with_scale: bool = False) -> tuple[RigidTransform, float]:
    """Transform that best overlays ``source`` anchors on ``target`` anchors.

    Anchors are either labeled mappings (labels must match) or equally ordered
    (K, 3) arrays. Returns ``(transform, residual)``; the residual is the sum of
    squared anchor distances after alignment.
    """
    if isinstance(source, Mapping) and isinstance(target, Mapping):
        if set(source) != set(target):
            raise ValidationError(f"anchor labels differ: {sorted(source)} vs {sorted(target)}")
    src, labels = _anchor_array(source)
    dst, _ = _anchor_array(target, labels)
    rot, trans, scale, residual = rigid_align_batch(src[None], dst[None], with_scale)
    return RigidTransform(rot[0], trans[0], float(scale[0])), float(residual[0])


def anchor_residual(transform: RigidTransform, source, target) -> float:
    src, labels = _anchor_array(source)
    dst, _ = _anchor_array(target, labels)
    return float(np.sum((transform.apply(src) - dst) ** 2))


# ---------------------------------------------------------------------------
# Euler angles
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EulerAngles:
    """Rotation angles about X, Y and Z in degrees.

    Values are stored as given (continuous series may leave (-180, 180]);
    :meth:`normalized` wraps them. ``gimbal_locked`` is set by
    :func:`rotation_to_euler` and does not take part in equality.
    """

    x: float
    y: float
    z: float
    gimbal_locked: bool = field(default=False, compare=False)

    def __post_init__(self):
        for name in "xyz":
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise ValidationError(f"Euler angle {name} must be finite, got {v}")
            object.__setattr__(self, name, v)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    @classmethod
    def from_array(cls, a, gimbal_locked: bool = False) -> "EulerAngles":
        return cls(float(a[0]), float(a[1]), float(a[2]), gimbal_locked)

    def normalized(self) -> "EulerAngles":
        return EulerAngles.from_array(wrap180(self.as_array()), self.gimbal_locked)


def wrap180(angle):
    """Wrap degrees into (-180, 180]."""
    a = np.asarray(angle, dtype=float)
    inside = (a > -180.0) & (a <= 180.0)
    w = np.where(inside, a, 180.0 - np.mod(180.0 - a, 360.0))
    return float(w) if np.ndim(w) == 0 else w


@dataclass(frozen=True)
class RotationConvention:
    """Axis order plus intrinsic/extrinsic mode.

    Intrinsic ``"ZXY"`` means R = Rz(z) @ Rx(x) @ Ry(y) (rotate about Z, then
    about the moved X, then the moved Y). Extrinsic ``"ZXY"`` applies the same
    rotations about fixed world axes: R = Ry(y) @ Rx(x) @ Rz(z).
    """

    order: str = "ZXY"
    mode: str = "intrinsic"

    def __post_init__(self):
        order = str(self.order).upper()
        if sorted(order) != list(AXES):
            raise ValidationError(f"axis order must be a permutation of XYZ, got {self.order!r}")
        if self.mode not in ("intrinsic", "extrinsic"):
            raise ValidationError(f"mode must be intrinsic or extrinsic, got {self.mode!r}")
        object.__setattr__(self, "order", order)

    @classmethod
    def parse(cls, text: str) -> "RotationConvention":
        """Parse ``"ZXY"``, ``"intrinsic:ZXY"`` or ``"extrinsic-XYZ"``."""
        text = text.strip()
        for sep in (":", "-", " "):
            if sep in text:
                mode, order = text.split(sep, 1)
                return cls(order.strip(), mode.strip().lower())
        return cls(text)

    def __str__(self) -> str:
        return f"{self.mode}:{self.order}"

    @property
    def intrinsic_axes(self) -> tuple[int, int, int]:
        """Axis indices in the order the matrices are multiplied left to right."""
        idx = tuple(AXES.index(a) for a in self.order)
        return idx if self.mode == "intrinsic" else idx[::-1]

    @property
    def middle_axis(self) -> int:
        return AXES.index(self.order[1])


DEFAULT_CONVENTION = RotationConvention("ZXY", "intrinsic")
ALL_CONVENTIONS = tuple(
    RotationConvention(o, m)
    for m in ("intrinsic", "extrinsic")
    for o in ("XYZ", "XZY", "YXZ", "YZX", "ZXY", "ZYX")
)


def axis_rotation(axis: int, angle_rad) -> np.ndarray:
    """Rotation matrices about a coordinate axis; ``angle_rad`` may be an array."""
    ang = np.asarray(angle_rad, dtype=float)
    c, s = np.cos(ang), np.sin(ang)
    p, q = (axis + 1) % 3, (axis + 2) % 3
    m = np.zeros(ang.shape + (3, 3))
    m[..., axis, axis] = 1.0
    m[..., p, p] = c
    m[..., q, q] = c
    m[..., q, p] = s
    m[..., p, q] = -s
    return m


def _axis_angle_of(m: np.ndarray, axis: int) -> np.ndarray:
    """Angle (rad) of matrices assumed to rotate about ``axis``."""
    p, q = (axis + 1) % 3, (axis + 2) % 3
    return np.arctan2(m[..., q, p], m[..., p, p])


def euler_array_to_matrix(angles_deg, convention: RotationConvention = DEFAULT_CONVENTION) -> np.ndarray:
    """Vectorized conversion of (..., 3) xyz angles in degrees to (..., 3, 3) matrices."""
    ang = np.radians(np.asarray(angles_deg, dtype=float))
    i, j, k = convention.intrinsic_axes
    return (
        axis_rotation(i, ang[..., i]) @ axis_rotation(j, ang[..., j]) @ axis_rotation(k, ang[..., k])
    )


def matrix_to_euler_array(r, convention: RotationConvention = DEFAULT_CONVENTION):
    """Vectorized inverse of :func:`euler_array_to_matrix`.

    Returns ``(angles_deg (..., 3), gimbal_locked (...))``. The middle angle lies
    in [-90, 90], the others in (-180, 180]. At gimbal lock the free angle goes
    to the convention's first rotation and the last rotation is zero.
    """
    r = np.asarray(r, dtype=float)
    i, j, k = convention.intrinsic_axes
    parity = 1.0 if (j - i) % 3 == 1 else -1.0

    cos_mid = np.hypot(r[..., j, k], r[..., k, k])
    mid = np.arctan2(parity * r[..., i, k], cos_mid)
    locked = cos_mid < _LOCK_TOL
    first = np.arctan2(-parity * r[..., j, k], r[..., k, k])
    rot_mid = axis_rotation(j, mid)

    # Last angle from the residual so it absorbs any error in the first one.
    swap = np.swapaxes
    resid = swap(rot_mid, -1, -2) @ swap(axis_rotation(i, first), -1, -2) @ r
    last = _axis_angle_of(resid, k)

    if np.any(locked):
        if convention.mode == "intrinsic":
            # free angle to i (first applied), k set to zero
            lock_first = _axis_angle_of(r @ swap(rot_mid, -1, -2), i)
            first = np.where(locked, lock_first, first)
            last = np.where(locked, 0.0, last)
        else:
            # extrinsic: the first applied rotation is about k
            lock_last = _axis_angle_of(swap(rot_mid, -1, -2) @ r, k)
            first = np.where(locked, 0.0, first)
            last = np.where(locked, lock_last, last)

    out = np.empty(r.shape[:-2] + (3,))
    out[..., i] = np.degrees(first)
    out[..., j] = np.degrees(mid)
    out[..., k] = np.degrees(last)
    out[..., i] = wrap180(out[..., i])
    out[..., k] = wrap180(out[..., k])
    return out, locked


def check_rotation(r, tol: float = 1e-6) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if r.shape[-2:] != (3, 3) or not np.all(np.isfinite(r)):
        raise NotARotation(f"expected finite 3x3 matrices, got shape {r.shape}")
    err = np.abs(np.swapaxes(r, -1, -2) @ r - np.eye(3)).max(axis=(-1, -2))
    det = np.linalg.det(r)
    if np.any(err > tol) or np.any(np.abs(det - 1.0) > tol):
        raise NotARotation("matrix is not orthonormal with determinant +1")
    return r


def euler_to_rotation(e: EulerAngles, c: RotationConvention = DEFAULT_CONVENTION) -> np.ndarray:
    return euler_array_to_matrix(e.as_array(), c)


def rotation_to_euler(r, c: RotationConvention = DEFAULT_CONVENTION) -> EulerAngles:
    r = check_rotation(r)
    if r.shape != (3, 3):
        raise NotARotation(f"expected a single 3x3 matrix, got shape {r.shape}")
    angles, locked = matrix_to_euler_array(r, c)
    return EulerAngles.from_array(angles, bool(locked))


def rotation_angle(r) -> np.ndarray:
    """Rotation angle (rad, in [0, pi]) of (..., 3, 3) rotation matrices.

    atan2 of the skew and trace parts stays accurate near 0 and near pi.
    """
    r = np.asarray(r, dtype=float)
    vee = np.stack(
        [r[..., 2, 1] - r[..., 1, 2], r[..., 0, 2] - r[..., 2, 0], r[..., 1, 0] - r[..., 0, 1]], axis=-1
    )
    sin_t = 0.5 * np.linalg.norm(vee, axis=-1)
    cos_t = 0.5 * (np.trace(r, axis1=-2, axis2=-1) - 1.0)
    return np.arctan2(sin_t, cos_t)


def rotation_distance(a, b) -> np.ndarray:
    """Geodesic distance (rad) between rotation matrices."""
    return rotation_angle(np.swapaxes(np.asarray(a), -1, -2) @ np.asarray(b))


def random_rotations(rng: np.random.Generator, n: int | None = None) -> np.ndarray:
    """Uniformly distributed rotations via normalized Gaussian quaternions."""
    q = rng.standard_normal((1 if n is None else n, 4))
    q /= np.linalg.norm(q, axis=1, keepdims=True)
    w, x, y, z = q.T
    r = np.stack(
        [
            np.stack([1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)], -1),
            np.stack([2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)], -1),
            np.stack([2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)], -1),
        ],
        axis=-2,
    )
    return r[0] if n is None else r


def sequence_anchor_xyz(seq: MotionSequence, labels: Sequence[str] | None = None) -> np.ndarray:
    """(T, 4, 3) anchor positions in canonical role order."""
    joints = seq.topology.anchor_joints if labels is None else labels
    idx = [seq.topology.index(j) for j in joints]
    return seq.xyz[:, idx]
