"""Readers and writers for skeleton streams, angle streams and event lists.

Skeleton stream: one JSON object per line,
``{"t": <seconds>, "joints": {"<name>": [x, y, z], ...}}``, meters.

Angle stream: CSV with header ``time_s,<channel>,...`` in degrees. An empty
cell means the channel has no sample at that time.

Readers are strict: anything malformed raises a :class:`FormatError` subclass
carrying the 1-based line number.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .anomaly import AnomalyEvent, EulerSeries
from .errors import EmptyFile, MissingJoint, ParseError, TimestampOrder
from .kinematics import FlexionSeries
from .registration import DEFAULT_CONVENTION, RotationConvention
from .skeleton import MotionSequence, RecordingMeta, SkeletonTopology

TIME_COLUMN = "time_s"
EULER_COLUMNS = ("x", "y", "z")


def _fmt(v: float, digits: int | None = None) -> str:
    """Shortest round-tripping text, or ``digits`` significant digits."""
    v = float(v)
    if digits is None:
        return repr(v)
    return repr(float(f"{v:.{digits}g}"))


def _reject_constant(token):
    raise ValueError(f"non-finite number {token}")


def _number(value, line: int, what: str, path) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParseError(line, f"{what} must be a number, got {value!r}", path)
    v = float(value)
    if not math.isfinite(v):
        raise ParseError(line, f"{what} must be finite, got {value!r}", path)
    return v


# ---------------------------------------------------------------------------
# skeleton streams
# ---------------------------------------------------------------------------


def skeleton_lines(seq: MotionSequence, digits: int | None = None) -> Iterable[str]:
    names = seq.topology.joints
    for t, xyz in zip(seq.times, seq.xyz):
        joints = ", ".join(
            f"{json.dumps(n)}: [{_fmt(p[0], digits)}, {_fmt(p[1], digits)}, {_fmt(p[2], digits)}]"
            for n, p in zip(names, xyz)
        )
        yield f'{{"t": {_fmt(t, digits)}, "joints": {{{joints}}}}}'


def write_skeleton_stream(seq: MotionSequence, path, digits: int | None = None) -> None:
    """Write one frame per line; ``digits`` limits significant digits (default: exact)."""
    with open(path, "w", encoding="utf-8") as fh:
        for line in skeleton_lines(seq, digits):
            fh.write(line + "\n")


def _parse_frame(text: str, line: int, topology: SkeletonTopology, path):
    try:
        obj = json.loads(text, parse_constant=_reject_constant)
    except ValueError as exc:
        raise ParseError(line, f"invalid JSON: {exc}", path) from None
    if not isinstance(obj, dict) or set(obj) != {"t", "joints"}:
        raise ParseError(line, 'frame must be an object with exactly "t" and "joints"', path)
    t = _number(obj["t"], line, "t", path)
    joints = obj["joints"]
    if not isinstance(joints, dict):
        raise ParseError(line, '"joints" must be an object', path)
    xyz = np.empty((len(topology.joints), 3))
    for name, p in joints.items():
        if name not in topology.joints:
            raise ParseError(line, f"unknown joint {name!r}", path)
        if not isinstance(p, list) or len(p) != 3:
            raise ParseError(line, f"joint {name!r} must be [x, y, z]", path)
        xyz[topology.index(name)] = [_number(c, line, f"{name} coordinate", path) for c in p]
    missing = [j for j in topology.joints if j not in joints]
    if missing:
        raise MissingJoint(line, f"missing joint(s) {missing}", path)
    return t, xyz


def read_skeleton_stream(path, topology: SkeletonTopology, meta: RecordingMeta | None = None) -> MotionSequence:
    """Parse a skeleton stream whose frames must carry every ``topology`` joint."""
    times, frames = [], []
    with open(path, encoding="utf-8") as fh:
        for line, text in enumerate(fh, start=1):
            if not text.strip():
                continue
            t, xyz = _parse_frame(text, line, topology, path)
            if times and not t > times[-1]:
                raise TimestampOrder(line, f"timestamp {t} does not follow {times[-1]}", path)
            times.append(t)
            frames.append(xyz)
    if not frames:
        raise EmptyFile(None, "no frames", path)
    return MotionSequence(topology, np.array(times), np.stack(frames), meta or RecordingMeta())


def stream_joint_names(path) -> list[str]:
    """Joint names on the first non-blank line, for picking a topology."""
    with open(path, encoding="utf-8") as fh:
        for line, text in enumerate(fh, start=1):
            if text.strip():
                try:
                    obj = json.loads(text, parse_constant=_reject_constant)
                    return list(obj["joints"])
                except (ValueError, KeyError, TypeError):
                    raise ParseError(line, "cannot read joint names", path) from None
    raise EmptyFile(None, "no frames", path)


def infer_topology(path, topologies: Iterable[SkeletonTopology]) -> SkeletonTopology:
    names = set(stream_joint_names(path))
    for topo in topologies:
        if set(topo.joints) == names:
            return topo
    raise ParseError(1, f"joint set matches no configured topology: {sorted(names)}", path)


# ---------------------------------------------------------------------------
# angle streams
# ---------------------------------------------------------------------------


def _parse_cell(cell: str, line: int, what: str, path) -> float:
    try:
        v = float(cell)
    except ValueError:
        raise ParseError(line, f"{what}: not a number: {cell!r}", path) from None
    if not math.isfinite(v):
        raise ParseError(line, f"{what}: not finite: {cell!r}", path)
    return v


def read_columns(path) -> tuple[list[str], np.ndarray, list[list[float | None]]]:
    """Raw angle-stream content: channel names, times, rows of values or ``None``."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = None
        times, rows = [], []
        try:
            for record in reader:
                line = reader.line_num
                if not record or (len(record) == 1 and not record[0].strip()):
                    continue
                if header is None:
                    header = [h.strip() for h in record]
                    if header[0] != TIME_COLUMN:
                        raise ParseError(line, f"missing header: first column must be {TIME_COLUMN!r}", path)
                    if len(header) < 2 or any(not h for h in header[1:]):
                        raise ParseError(line, "header needs non-empty channel names", path)
                    if len(set(header)) != len(header):
                        raise ParseError(line, "duplicate column names", path)
                    continue
                if len(record) != len(header):
                    raise ParseError(line, f"row has {len(record)} fields, header has {len(header)}", path)
                t = _parse_cell(record[0].strip(), line, TIME_COLUMN, path)
                if times and not t > times[-1]:
                    raise TimestampOrder(line, f"timestamp {t} does not follow {times[-1]}", path)
                values = [
                    None if not c.strip() else _parse_cell(c.strip(), line, name, path)
                    for c, name in zip(record[1:], header[1:])
                ]
                times.append(t)
                rows.append(values)
        except csv.Error as exc:
            raise ParseError(reader.line_num, f"malformed CSV: {exc}", path) from None
    if header is None:
        raise EmptyFile(None, "file is empty", path)
    if not rows:
        raise EmptyFile(None, "header but no data rows", path)
    return header[1:], np.array(times), rows


def read_angle_stream(path, source: str = "reference-native") -> list[FlexionSeries]:
    """One :class:`FlexionSeries` per channel column; empty cells count as gaps."""
    names, times, rows = read_columns(path)
    out = []
    for k, name in enumerate(names):
        col = [r[k] for r in rows]
        keep = np.array([v is not None for v in col])
        values = np.array([v for v in col if v is not None], dtype=float)
        out.append(FlexionSeries(name, times[keep], values, source, gaps=int((~keep).sum())))
    return out


def angle_stream_text(series: Sequence[FlexionSeries], digits: int | None = None) -> str:
    """Channels on the union of their timestamps, missing cells left empty."""
    if not series:
        raise EmptyFile(None, "no channels to write")
    times = np.unique(np.concatenate([s.t for s in series]))
    lookup = [dict(zip(s.t.tolist(), s.angle.tolist())) for s in series]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([TIME_COLUMN] + [s.channel for s in series])
    for t in times.tolist():
        w.writerow([_fmt(t, digits)] + [_fmt(d[t], digits) if t in d else "" for d in lookup])
    return buf.getvalue()


def write_angle_stream(series: Sequence[FlexionSeries], path, digits: int | None = None) -> None:
    text = angle_stream_text(series, digits)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(text)


def read_euler_stream(path, convention: RotationConvention = DEFAULT_CONVENTION) -> EulerSeries:
    """Read ``time_s,x,y,z`` (degrees); every cell must be filled."""
    names, times, rows = read_columns(path)
    if names != list(EULER_COLUMNS):
        raise ParseError(1, f"Euler stream columns must be {TIME_COLUMN},x,y,z; got {names}", path)
    for k, r in enumerate(rows):
        if any(v is None for v in r):
            raise ParseError(k + 2, "Euler stream rows must be complete", path)
    return EulerSeries(times, np.array(rows, dtype=float), convention)


def write_euler_stream(series: EulerSeries, path, digits: int | None = None) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow((TIME_COLUMN,) + EULER_COLUMNS)
        for t, a in zip(series.t.tolist(), series.angles.tolist()):
            w.writerow([_fmt(t, digits)] + [_fmt(v, digits) for v in a])


# ---------------------------------------------------------------------------
# events
# ---------------------------------------------------------------------------

EVENT_COLUMNS = (
    "index", "t_before", "t_after", "jump_x_deg", "jump_y_deg", "jump_z_deg",
    "geodesic_deg", "kind", "x_after_deg",
)


def events_csv(events: Sequence[AnomalyEvent]) -> bytes:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(EVENT_COLUMNS)
    for e in events:
        w.writerow([
            e.index, _fmt(e.t_before), _fmt(e.t_after), *(f"{j:.2f}" for j in e.jump),
            f"{e.geodesic_deg:.2f}", e.kind, f"{e.x_after:.2f}",
        ])
    return buf.getvalue().encode("utf-8")


# ---------------------------------------------------------------------------
# recording manifests
# ---------------------------------------------------------------------------

MANIFEST_FILES = ("reference_angles", "reference_skeleton", "estimated_skeleton")
MANIFEST_META = ("subject", "exercise", "perspective", "clothing", "repetitions")


def read_manifest(path) -> list[dict]:
    """Recording list for batch comparison (YAML or JSON).

    Each entry names its files (relative to the manifest) and metadata::

        recordings:
          - reference_angles: s01_squat_imu.csv
            reference_skeleton: s01_squat_imu.jsonl
            estimated_skeleton: s01_squat_camera.jsonl
            subject: s01
            exercise: squat
            perspective: 45
            clothing: tight
    """
    import yaml

    base = Path(path).parent
    try:
        doc = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ParseError(mark.line + 1 if mark else None, f"invalid manifest: {exc}", path) from None
    if not isinstance(doc, Mapping) or not isinstance(doc.get("recordings"), list):
        raise ParseError(None, 'manifest needs a "recordings" list', path)
    out = []
    for k, entry in enumerate(doc["recordings"]):
        if not isinstance(entry, Mapping):
            raise ParseError(None, f"recording {k} must be a mapping", path)
        unknown = set(entry) - set(MANIFEST_FILES) - set(MANIFEST_META)
        if unknown:
            raise ParseError(None, f"recording {k}: unknown field(s) {sorted(unknown)}", path)
        rec = {f: str(base / entry[f]) for f in MANIFEST_FILES if entry.get(f)}
        rec["meta"] = RecordingMeta(
            subject=str(entry.get("subject", "unknown")),
            exercise=str(entry.get("exercise", "other")),
            camera_perspective_deg=float(entry.get("perspective", 0.0)),
            clothing=str(entry.get("clothing", "")),
            repetitions=int(entry.get("repetitions", 1)),
        )
        out.append(rec)
    if not out:
        raise EmptyFile(None, "manifest lists no recordings", path)
    return out
