"""End-to-end processing: map, normalize, align, measure, compare.

Order is fixed: a skeleton is mapped to the comparison topology, normalized
per frame, then rotated onto the reference skeleton via the shoulder and hip
anchors, and only then measured.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .anomaly import EulerSeries, canonicalize
from .errors import EmptySeries, NoOverlap, ValidationError
from .kinematics import FlexionSeries, JointAngleSpec, fold180, flexion_series
from .registration import DEFAULT_CONVENTION, RotationConvention, normalize_sequence, rigid_align_batch
from .skeleton import ANCHOR_ROLES, JointMap, MotionSequence, SkeletonTopology, map_sequence
from .sync import DEFAULT_MAX_GAP, PairedSeries, pair_streams

log = logging.getLogger(__name__)

GRANULARITIES = ("per-frame", "first-frame")


def _role_anchors(seq: MotionSequence) -> np.ndarray:
    idx = [seq.topology.index(seq.topology.anchors[r]) for r in ANCHOR_ROLES]
    return seq.xyz[:, idx]


def _sample_at(seq: MotionSequence, points: np.ndarray, times: np.ndarray, max_gap: float):
    """Linearly interpolate per-frame ``points`` (T, K, 3) of ``seq`` at ``times``.

    Returns interpolated points and a mask of times within span and ``max_gap``.
    """
    ts = seq.times
    hi = np.clip(np.searchsorted(ts, times), 0, ts.size - 1)
    lo = np.clip(hi - 1, 0, ts.size - 1)
    dist = np.minimum(np.abs(times - ts[lo]), np.abs(ts[hi] - times))
    ok = (times >= ts[0] - 1e-9) & (times <= ts[-1] + 1e-9) & (dist <= max_gap)
    span = ts[hi] - ts[lo]
    w = np.divide(times - ts[lo], span, out=np.zeros_like(times), where=span > 0)
    w = np.clip(w, 0.0, 1.0)[:, None, None]
    return points[lo] + w * (points[hi] - points[lo]), ok


def align_to_reference(
    estimated: MotionSequence,
    reference: MotionSequence,
    granularity: str = "per-frame",
    with_scale: bool = False,
    max_gap: float = DEFAULT_MAX_GAP,
) -> MotionSequence:
    """Normalize both skeletons and rotate ``estimated`` onto ``reference``.

    Anchors are matched by role, so the two topologies may differ. Reference
    anchors are interpolated to the estimated frame times; frames with no
    reference frame within ``max_gap`` are dropped. ``first-frame`` fits one
    transform on the first usable frame and applies it throughout.
    """
    if granularity not in GRANULARITIES:
        raise ValidationError(f"granularity must be one of {GRANULARITIES}, got {granularity!r}")
    est = normalize_sequence(estimated)
    ref = normalize_sequence(reference)
    ref_anchor, ok = _sample_at(ref, _role_anchors(ref), est.times, max_gap)
    if not np.any(ok):
        raise NoOverlap("no estimated frame has a reference frame within max_gap")
    if not np.all(ok):
        log.info("alignment: %d frame(s) without reference dropped", int((~ok).sum()))
        est = est.replace(times=est.times[ok], xyz=est.xyz[ok])
        ref_anchor = ref_anchor[ok]

    src = _role_anchors(est)
    if granularity == "first-frame":
        rot, trans, scale, _ = rigid_align_batch(src[:1], ref_anchor[:1], with_scale)
        rot = np.repeat(rot, len(est), axis=0)
        trans = np.repeat(trans, len(est), axis=0)
        scale = np.repeat(scale, len(est))
    else:
        rot, trans, scale, _ = rigid_align_batch(src, ref_anchor, with_scale)
    xyz = scale[:, None, None] * np.einsum("nij,nkj->nki", rot, est.xyz) + trans[:, None]
    return est.replace(xyz=xyz)


def skeleton_flexion(
    seq: MotionSequence,
    specs: Sequence[JointAngleSpec],
    *,
    reference: MotionSequence | None = None,
    joint_map: JointMap | None = None,
    target: SkeletonTopology | None = None,
    granularity: str = "per-frame",
    with_scale: bool = False,
    max_gap: float = DEFAULT_MAX_GAP,
    source: str = "estimated-skeleton",
) -> list[FlexionSeries]:
    """Flexion channels of a skeleton, optionally mapped and aligned first."""
    if target is not None and (joint_map is not None or seq.topology.joints != target.joints):
        seq = map_sequence(seq, joint_map, target)
    if reference is not None:
        seq = align_to_reference(seq, reference, granularity, with_scale, max_gap)
    else:
        seq = normalize_sequence(seq)
    return flexion_series(seq, specs, source=source)


def euler_channel(
    columns: Mapping[str, FlexionSeries],
    channel: str,
    component: str = "x",
    convention: RotationConvention = DEFAULT_CONVENTION,
    repair: bool = False,
) -> tuple[FlexionSeries, int] | None:
    """Build a native angle channel from ``<channel>.x/.y/.z`` Euler columns.

    Returns ``None`` when the three columns are not all present. The chosen
    component is folded onto [0, 180]; with ``repair`` the triple is first
    moved onto a continuous branch. Also returns the repair count.
    """
    names = [f"{channel}.{a}" for a in "xyz"]
    if not all(n in columns for n in names):
        return None
    cols = [columns[n] for n in names]
    t = cols[0].t
    if any(c.t.shape != t.shape or np.any(c.t != t) for c in cols):
        raise ValidationError(f"{channel}: Euler columns must be sampled together")
    series = EulerSeries(t, np.stack([c.angle for c in cols], axis=1), convention)
    repairs = 0
    if repair:
        series, repairs = canonicalize(series)
    value = fold180(series.angles[:, "xyz".index(component)])
    return FlexionSeries(channel, t, value, "reference-native"), repairs


def native_channels(
    columns: Sequence[FlexionSeries],
    wanted: Sequence[str],
    component: str = "x",
    convention: RotationConvention = DEFAULT_CONVENTION,
    repair: bool = False,
) -> tuple[dict[str, FlexionSeries], int]:
    """Native reference channels by name, deriving Euler-backed ones as needed."""
    by_name = {c.channel: c for c in columns}
    out, repairs = {}, 0
    for ch in wanted:
        derived = euler_channel(by_name, ch, component, convention, repair)
        if derived is not None:
            out[ch], n = derived
            repairs += n
        elif ch in by_name:
            out[ch] = by_name[ch]
    return out, repairs


@dataclass(frozen=True)
class ChannelComparison:
    channel: str
    paired: PairedSeries

    @property
    def deviations(self) -> np.ndarray:
        return np.abs(self.paired.a - self.paired.b)


def compare_channels(
    native: Mapping[str, FlexionSeries],
    computed: Sequence[FlexionSeries],
    max_gap: float = DEFAULT_MAX_GAP,
    method: str = "linear",
    interpolate: str = "reference",
) -> list[ChannelComparison]:
    """Pair computed channels with native ones and keep the deviations.

    With ``interpolate="reference"`` the native stream is resampled at the
    computed timestamps; ``"computed"`` reverses the roles.
    """
    if interpolate not in ("reference", "computed"):
        raise ValidationError(f"interpolate must be 'reference' or 'computed', got {interpolate!r}")
    out = []
    for series in computed:
        ref = native.get(series.channel)
        if ref is None:
            log.info("no native channel %r; skipped", series.channel)
            continue
        if len(series) == 0:
            raise EmptySeries(f"{series.channel}: no usable computed samples")
        a, b = (series, ref) if interpolate == "reference" else (ref, series)
        paired = pair_streams(a, b, max_gap, method)
        if interpolate == "reference":
            paired = PairedSeries(paired.channel, paired.t, paired.a, paired.b, paired.method,
                                  paired.gaps + series.gaps)
        out.append(ChannelComparison(series.channel, paired))
    return out
