"""Temporal pairing of angle streams and pooled deviation statistics."""

from __future__ import annotations

import statistics
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import EmptyGroup, EmptyInput, EmptySeries, NoOverlap, ValidationError
from .kinematics import FlexionSeries, channel_sort_key
from .skeleton import EXERCISES, RecordingMeta

PAIRING_METHODS = ("exact", "nearest", "linear")
COMPARISON_MODES = ("self-consistency", "cross-system")
GROUP_KEYS = {
    "perspective": "camera_perspective_deg",
    "clothing": "clothing",
    "subject": "subject",
}
DEFAULT_MAX_GAP = 0.1
_EXACT_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class PairedSeries:
    channel: str
    t: np.ndarray
    a: np.ndarray
    b: np.ndarray
    method: str = "linear"
    gaps: int = 0

    @property
    def samples(self) -> list[tuple[float, float, float]]:
        return list(zip(self.t.tolist(), self.a.tolist(), self.b.tolist()))

    def __len__(self) -> int:
        return self.t.size


def pair_streams(
    a: FlexionSeries,
    b: FlexionSeries,
    max_gap: float = DEFAULT_MAX_GAP,
    method: str = "linear",
) -> PairedSeries:
    """Sample ``b`` at the timestamps of ``a``.

    ``a`` samples outside ``b``'s time span, or farther than ``max_gap`` from
    every ``b`` sample, are dropped and counted as gaps. ``exact`` only accepts
    coincident timestamps.
    """
    if method not in PAIRING_METHODS:
        raise ValidationError(f"pairing method must be one of {PAIRING_METHODS}, got {method!r}")
    if not max_gap > 0:
        raise ValidationError(f"max_gap must be positive, got {max_gap}")
    if len(a) == 0 or len(b) == 0:
        raise EmptySeries(f"cannot pair empty series ({a.channel!r}: {len(a)}, {b.channel!r}: {len(b)})")
    if a.t[-1] < b.t[0] or b.t[-1] < a.t[0]:
        raise NoOverlap(
            f"{a.channel}: spans [{a.t[0]:g}, {a.t[-1]:g}] and [{b.t[0]:g}, {b.t[-1]:g}] s are disjoint"
        )

    ta, tb, vb = a.t, b.t, b.angle
    hi = np.clip(np.searchsorted(tb, ta), 0, tb.size - 1)
    lo = np.clip(hi - 1, 0, tb.size - 1)
    d_lo = np.abs(ta - tb[lo])
    d_hi = np.abs(tb[hi] - ta)
    nearest = np.where(d_lo <= d_hi, lo, hi)
    dist = np.minimum(d_lo, d_hi)

    in_span = (ta >= tb[0] - _EXACT_TOL) & (ta <= tb[-1] + _EXACT_TOL)
    if method == "exact":
        keep = dist <= _EXACT_TOL
        val = vb[nearest]
    else:
        keep = in_span & (dist <= max_gap)
        if method == "nearest":
            val = vb[nearest]
        else:
            span = tb[hi] - tb[lo]
            w = np.divide(ta - tb[lo], span, out=np.zeros_like(ta), where=span > 0)
            w = np.clip(w, 0.0, 1.0)
            val = vb[lo] + w * (vb[hi] - vb[lo])
            val = np.where(dist <= _EXACT_TOL, vb[nearest], val)
    return PairedSeries(a.channel, ta[keep], a.angle[keep], val[keep], method, int((~keep).sum()))


def deviation_series(p: PairedSeries) -> list[tuple[float, float]]:
    return list(zip(p.t.tolist(), np.abs(p.a - p.b).tolist()))


@dataclass(frozen=True)
class DeviationStats:
    median: float
    average: float
    maximum: float
    samples: int
    gaps: int = 0


def aggregate(devs: Iterable[float], gaps: int = 0) -> DeviationStats:
    """Median, mean and maximum of a list of deviations.

    The mean is the correctly rounded value of the exact rational mean.
    """
    data = [float(d) for d in devs]
    if not data:
        raise EmptyInput("cannot aggregate an empty deviation list")
    return DeviationStats(
        median=statistics.median(data),
        average=float(statistics.mean(data)),
        maximum=max(data),
        samples=len(data),
        gaps=int(gaps),
    )


@dataclass(frozen=True)
class ReportRow:
    channel: str
    exercise: str
    stats: DeviationStats
    groups: tuple[tuple[str, object], ...] = ()


@dataclass(frozen=True)
class DeviationReport:
    rows: tuple[ReportRow, ...]
    mode: str = "cross-system"
    group_by: tuple[str, ...] = ()
    header: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.mode not in COMPARISON_MODES:
            raise ValidationError(f"mode must be one of {COMPARISON_MODES}, got {self.mode!r}")
        keys = [(r.channel, r.exercise, r.groups) for r in self.rows]
        if len(set(keys)) != len(keys):
            raise ValidationError("report rows must have unique (channel, exercise) groups")

    def row(self, channel: str, exercise: str) -> ReportRow:
        for r in self.rows:
            if r.channel == channel and r.exercise == exercise:
                return r
        raise KeyError((channel, exercise))


def _exercise_key(ex: str):
    return (EXERCISES.index(ex), ex) if ex in EXERCISES else (len(EXERCISES), ex)


def _parse_group_by(group_by) -> tuple[tuple[str, ...], dict[str, str]]:
    keys, select = [], {}
    for item in group_by or ():
        key, _, value = str(item).partition("=")
        key = key.strip()
        if key not in GROUP_KEYS:
            raise ValidationError(f"unknown grouping key {key!r}; choose from {sorted(GROUP_KEYS)}")
        if key not in keys:
            keys.append(key)
        if value:
            select[key] = value.strip()
    return tuple(keys), select


def _matches(meta: RecordingMeta, key: str, wanted: str) -> bool:
    value = getattr(meta, GROUP_KEYS[key])
    if isinstance(value, float):
        try:
            return value == float(wanted)
        except ValueError:
            return False
    return str(value) == wanted


def group_report(
    recordings: Sequence[tuple],
    group_by: Sequence[str] = (),
    mode: str = "cross-system",
    header: Mapping[str, str] | None = None,
) -> DeviationReport:
    """Pool deviations per (channel, exercise[, extra keys]) and aggregate each pool.

    ``recordings`` holds ``(meta, channel, deviations)`` or
    ``(meta, channel, deviations, gaps)`` tuples. ``group_by`` names extra keys
    (``perspective``, ``clothing``, ``subject``); ``"clothing=jacket"`` both
    groups by clothing and restricts the report to that value, raising
    :class:`EmptyGroup` if nothing matches.
    """
    keys, select = _parse_group_by(group_by)
    pools: dict[tuple, list[float]] = defaultdict(list)
    gaps: dict[tuple, int] = defaultdict(int)
    for rec in recordings:
        meta, channel, devs = rec[0], rec[1], rec[2]
        n_gap = int(rec[3]) if len(rec) > 3 else 0
        if any(not _matches(meta, k, v) for k, v in select.items()):
            continue
        extra = tuple((k, getattr(meta, GROUP_KEYS[k])) for k in keys)
        gk = (channel, meta.exercise, extra)
        pools[gk].extend(float(d) for d in devs)
        gaps[gk] += n_gap

    for k, v in select.items():
        if not any(dict(gk[2]).get(k) is not None for gk in pools):
            raise EmptyGroup(f"{k}={v}", f"EmptyGroup: no recording has {k}={v}")
    rows = []
    for gk, devs in pools.items():
        if not devs:
            raise EmptyGroup(gk[:2], f"EmptyGroup: group {gk[:2]} has no deviation samples")
        rows.append(ReportRow(gk[0], gk[1], aggregate(devs, gaps[gk]), gk[2]))
    if not rows:
        raise EmptyGroup("*", "EmptyGroup: no recordings to report")
    rows.sort(key=lambda r: (channel_sort_key(r.channel), _exercise_key(r.exercise), str(r.groups)))
    return DeviationReport(tuple(rows), mode, keys, dict(header or {}))
