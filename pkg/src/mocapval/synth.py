"""Synthetic exercises with exactly known flexion, for testing the pipeline.

The generated body moves only in sagittal planes (world X forward, Y left,
Z up), so each channel's flexion follows its trajectory exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import InvalidLength, InvalidProfile, UnknownChannel, UnknownJoint
from .kinematics import CHANNEL_ORDER, FlexionSeries
from .registration import RigidTransform
from .skeleton import MotionSequence, RecordingMeta, SkeletonTopology

SHAPES = ("sinusoidal", "trapezoid")
# ankle flexion is |shank-foot angle - 90|, so it cannot exceed 90
CHANNEL_LIMITS = {c: (90.0 if c.startswith("ankle") else 180.0) for c in CHANNEL_ORDER}

SEGMENT_JOINTS = (
    "pelvis", "l5", "t8", "neck", "head",
    "hip_right", "knee_right", "ankle_right", "toe_right",
    "hip_left", "knee_left", "ankle_left", "toe_left",
    "shoulder_right", "elbow_right", "wrist_right",
    "shoulder_left", "elbow_left", "wrist_left",
)

# meters, roughly a 1.75 m adult
DEFAULT_LIMB_LENGTHS = {
    "thigh": 0.43,
    "shank": 0.43,
    "foot": 0.20,
    "lumbar": 0.12,
    "l5_t8": 0.18,
    "t8_neck": 0.22,
    "neck_head": 0.15,
    "upper_arm": 0.30,
    "forearm": 0.27,
    "hip_width": 0.20,
    "shoulder_width": 0.38,
}


@dataclass(frozen=True)
class MotionProfile:
    shape: str = "sinusoidal"
    amplitude: float = 90.0
    period: float = 2.0
    repetitions: int = 10
    rate: float = 60.0
    channels: tuple[str, ...] = ("knee_right", "knee_left")

    def __post_init__(self):
        object.__setattr__(self, "channels", tuple(self.channels))


@dataclass(frozen=True)
class Perturbation:
    transform: RigidTransform = field(default_factory=RigidTransform)
    scale: float = 1.0
    noise_sigma: float = 0.0
    dropout: float = 0.0

    def __post_init__(self):
        if not self.scale > 0:
            raise InvalidProfile(f"perturbation scale must be positive, got {self.scale}")
        if not self.noise_sigma >= 0:
            raise InvalidProfile(f"noise sigma must be >= 0, got {self.noise_sigma}")
        if not 0 <= self.dropout < 1:
            raise InvalidProfile(f"dropout must lie in [0, 1), got {self.dropout}")


def _check_profile(p: MotionProfile) -> None:
    if p.shape not in SHAPES:
        raise InvalidProfile(f"shape must be one of {SHAPES}, got {p.shape!r}")
    if not 0 < p.amplitude <= 180:
        raise InvalidProfile(f"amplitude must lie in (0, 180], got {p.amplitude}")
    if not (p.period > 0 and p.rate > 0):
        raise InvalidProfile("period and rate must be positive")
    if int(p.repetitions) != p.repetitions or p.repetitions < 1:
        raise InvalidProfile(f"repetitions must be a positive integer, got {p.repetitions}")
    if not p.channels:
        raise InvalidProfile("profile drives no channels")


def _phase_shape(shape: str, m: np.ndarray, n: int) -> np.ndarray:
    """Unit-amplitude cycle evaluated at integer phase steps ``m`` out of ``n``."""
    if shape == "sinusoidal":
        return np.sin(np.pi * m / n) ** 2
    q = n // 4
    return np.select(
        [m < q, m < 2 * q, m < 3 * q],
        [m / q, np.ones_like(m, dtype=float), (3 * q - m) / q],
        default=0.0,
    )


def generate_trajectory(p: MotionProfile) -> dict[str, FlexionSeries]:
    """Ground-truth flexion for every driven channel.

    Each cycle is sampled on a grid with a multiple of four steps per period
    (the effective rate is rounded accordingly), so the peak, trough and
    plateau edges are hit exactly.
    """
    _check_profile(p)
    n = max(4, 4 * int(round(p.period * p.rate / 4)))
    k = np.arange(p.repetitions * n + 1)
    t = k * (p.period / n)
    angle = p.amplitude * _phase_shape(p.shape, k % n, n)
    return {c: FlexionSeries(c, t, angle, "reference-native") for c in p.channels}


def _dir_down(psi):
    """Unit vectors in the XZ plane at angle ``psi`` (deg) from straight down, toward +X."""
    r = np.radians(psi)
    return np.stack([np.sin(r), np.zeros_like(r), -np.cos(r)], axis=-1)


def _dir_up(beta):
    r = np.radians(beta)
    return np.stack([np.sin(r), np.zeros_like(r), np.cos(r)], axis=-1)


def segment_topology(name: str = "segments") -> SkeletonTopology:
    edges = [
        ("pelvis", "l5"), ("l5", "t8"), ("t8", "neck"), ("neck", "head"),
        ("pelvis", "hip_right"), ("hip_right", "knee_right"), ("knee_right", "ankle_right"),
        ("ankle_right", "toe_right"),
        ("pelvis", "hip_left"), ("hip_left", "knee_left"), ("knee_left", "ankle_left"),
        ("ankle_left", "toe_left"),
        ("t8", "shoulder_right"), ("shoulder_right", "elbow_right"), ("elbow_right", "wrist_right"),
        ("t8", "shoulder_left"), ("shoulder_left", "elbow_left"), ("elbow_left", "wrist_left"),
    ]
    anchors = {
        "left_shoulder": "shoulder_left",
        "right_shoulder": "shoulder_right",
        "left_hip": "hip_left",
        "right_hip": "hip_right",
    }
    return SkeletonTopology(name, SEGMENT_JOINTS, edges, anchors)


def forward_skeleton(
    trajectories: Mapping[str, FlexionSeries],
    limb_lengths: Mapping[str, float] | None = None,
    topology: SkeletonTopology | None = None,
    meta: RecordingMeta | None = None,
) -> MotionSequence:
    """Pose a sagittal-plane body so that each channel shows its trajectory.

    Channels not in ``trajectories`` stay at 0 (straight limbs, upright trunk).
    All trajectories must share one time grid.
    """
    topology = topology or segment_topology()
    lengths = dict(DEFAULT_LIMB_LENGTHS)
    for key, value in (limb_lengths or {}).items():
        if key not in DEFAULT_LIMB_LENGTHS:
            raise InvalidLength(key, f"InvalidLength: unknown segment {key!r}")
        lengths[key] = float(value)
    for key, value in lengths.items():
        if not value > 0:
            raise InvalidLength(key, f"InvalidLength: {key} must be > 0, got {value}")
    missing = [j for j in SEGMENT_JOINTS if j not in topology.joints]
    if missing:
        raise UnknownJoint(missing[0])
    extra = [j for j in topology.joints if j not in SEGMENT_JOINTS]
    if extra:
        raise UnknownJoint(extra[0], f"UnknownJoint: cannot pose {extra[0]!r}")
    if not trajectories:
        raise InvalidProfile("no trajectories given")

    t = None
    for ch, series in trajectories.items():
        if ch not in CHANNEL_LIMITS:
            raise UnknownChannel(ch)
        if t is None:
            t = series.t
        elif series.t.shape != t.shape or np.any(series.t != t):
            raise InvalidProfile(f"{ch}: trajectories must share one time grid")
        if np.any(series.angle < 0) or np.any(series.angle > CHANNEL_LIMITS[ch]):
            raise InvalidProfile(f"{ch}: values must lie in [0, {CHANNEL_LIMITS[ch]:g}]")

    def ang(ch):
        return trajectories[ch].angle if ch in trajectories else np.zeros(t.size)

    L = lengths
    pos = {}
    pelvis = np.zeros((t.size, 3))
    pelvis[:, 2] = L["thigh"] + L["shank"] + 0.08
    pos["pelvis"] = pelvis

    beta_p, beta_t = ang("back_pelvis"), ang("back_t8")
    pos["l5"] = pelvis + L["lumbar"] * _dir_up(beta_p)
    pos["t8"] = pos["l5"] + L["l5_t8"] * _dir_up(beta_p)
    pos["neck"] = pos["t8"] + L["t8_neck"] * _dir_up(beta_t)
    pos["head"] = pos["neck"] + L["neck_head"] * _dir_up(beta_t)

    for side, sign in (("left", 1.0), ("right", -1.0)):
        lateral = np.array([0.0, sign, 0.0])
        knee = ang(f"knee_{side}")
        ankle = ang(f"ankle_{side}")
        hip = pelvis + lateral * L["hip_width"] / 2
        pos[f"hip_{side}"] = hip
        pos[f"knee_{side}"] = hip + L["thigh"] * _dir_down(knee / 2)
        pos[f"ankle_{side}"] = pos[f"knee_{side}"] + L["shank"] * _dir_down(-knee / 2)
        pos[f"toe_{side}"] = pos[f"ankle_{side}"] + L["foot"] * _dir_down(-knee / 2 + 90.0 - ankle)

        shoulder = pos["neck"] - 0.05 * _dir_up(beta_t) + lateral * L["shoulder_width"] / 2
        pos[f"shoulder_{side}"] = shoulder
        pos[f"elbow_{side}"] = shoulder + L["upper_arm"] * _dir_down(np.zeros(t.size))
        pos[f"wrist_{side}"] = pos[f"elbow_{side}"] + L["forearm"] * _dir_down(ang(f"elbow_{side}"))

    xyz = np.stack([pos[j] for j in topology.joints], axis=1)
    return MotionSequence(topology, t, xyz, meta or RecordingMeta())


def perturb(seq: MotionSequence, p: Perturbation, seed: int = 0) -> MotionSequence:
    """Move, scale and corrupt a sequence the way a second capture system might.

    Noise is isotropic Gaussian per coordinate. A frame in which any joint
    drops out is removed entirely, leaving a gap in time.
    """
    rng = np.random.default_rng(seed)
    xyz = p.scale * p.transform.apply(seq.xyz)
    if p.noise_sigma > 0:
        xyz = xyz + rng.normal(0.0, p.noise_sigma, size=xyz.shape)
    times = seq.times
    if p.dropout > 0:
        keep = ~np.any(rng.random(xyz.shape[:2]) < p.dropout, axis=1)
        xyz, times = xyz[keep], times[keep]
    return MotionSequence(seq.topology, times, xyz, seq.meta)


def random_profile(rng: np.random.Generator, channels: Sequence[str] = CHANNEL_ORDER) -> MotionProfile:
    """A random valid profile; amplitude is capped by the tightest driven channel."""
    k = int(rng.integers(1, len(channels) + 1))
    driven = tuple(rng.choice(channels, size=k, replace=False).tolist())
    cap = min(CHANNEL_LIMITS[c] for c in driven)
    return MotionProfile(
        shape=str(rng.choice(SHAPES)),
        amplitude=float(rng.uniform(1.0, cap)),
        period=float(rng.uniform(0.5, 4.0)),
        repetitions=int(rng.integers(1, 11)),
        rate=float(rng.uniform(20.0, 120.0)),
        channels=driven,
    )


def mpjpe(estimate: MotionSequence, truth: MotionSequence, root: str = "pelvis") -> float:
    """Mean per-joint position error (meters) after subtracting each frame's root joint.

    Both sequences must share topology and timestamps. The root itself is
    excluded from the mean since its relative error is zero by construction.
    """
    if estimate.topology.joints != truth.topology.joints or estimate.times.shape != truth.times.shape:
        raise InvalidProfile("mpjpe needs sequences with equal topology and frame count")
    k = truth.topology.index(root)
    rel_e = estimate.xyz - estimate.xyz[:, k : k + 1]
    rel_t = truth.xyz - truth.xyz[:, k : k + 1]
    err = np.linalg.norm(np.delete(rel_e - rel_t, k, axis=1), axis=-1)
    return float(err.mean())
