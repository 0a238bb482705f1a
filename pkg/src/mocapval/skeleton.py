"""Skeleton topologies, frames, sequences and joint correspondence."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .errors import (
    CyclicEdges,
    DanglingEdge,
    DuplicateJoint,
    IncompleteMap,
    MissingAnchor,
    MissingSourceJoint,
    ValidationError,
)

ANCHOR_ROLES = ("left_shoulder", "right_shoulder", "left_hip", "right_hip")
EXERCISES = ("squat", "situp", "pushup")


@dataclass(frozen=True)
class SkeletonTopology:
    """Named joints, parent->child edges and the four alignment anchors.

    ``anchors`` maps each role in :data:`ANCHOR_ROLES` to a joint name.
    Construction does not validate; call :func:`validate_topology`.
    """

    name: str
    joints: tuple[str, ...]
    edges: tuple[tuple[str, str], ...] = ()
    anchors: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "joints", tuple(self.joints))
        object.__setattr__(self, "edges", tuple(tuple(e) for e in self.edges))
        object.__setattr__(self, "anchors", dict(self.anchors))

    def index(self, joint: str) -> int:
        return self.joints.index(joint)

    @property
    def anchor_joints(self) -> tuple[str, ...]:
        return tuple(self.anchors[r] for r in ANCHOR_ROLES)

    def __hash__(self):
        return hash((self.name, self.joints, self.edges))


def validate_topology(topology: SkeletonTopology) -> SkeletonTopology:
    """Return ``topology`` unchanged if all its invariants hold, else raise."""
    seen: set[str] = set()
    for j in topology.joints:
        if not isinstance(j, str) or not j:
            raise ValidationError(f"joint names must be non-empty strings, got {j!r}")
        if j in seen:
            raise DuplicateJoint(j)
        seen.add(j)

    for parent, child in topology.edges:
        for end in (parent, child):
            if end not in seen:
                raise DanglingEdge(end)

    used = []
    for role in ANCHOR_ROLES:
        joint = topology.anchors.get(role)
        if joint is None:
            raise MissingAnchor(role, f"MissingAnchor: no joint for role {role!r}")
        if joint not in seen:
            raise MissingAnchor(joint, f"MissingAnchor: {role} joint {joint!r} is not declared")
        if joint in used:
            raise MissingAnchor(joint, f"MissingAnchor: {joint!r} used for more than one anchor role")
        used.append(joint)

    # Kahn's algorithm; whatever survives sits on a cycle.
    children: dict[str, list[str]] = {j: [] for j in topology.joints}
    indegree = dict.fromkeys(topology.joints, 0)
    for parent, child in topology.edges:
        children[parent].append(child)
        indegree[child] += 1
    queue = [j for j, d in indegree.items() if d == 0]
    while queue:
        j = queue.pop()
        for c in children[j]:
            indegree[c] -= 1
            if indegree[c] == 0:
                queue.append(c)
    on_cycle = [j for j, d in indegree.items() if d > 0]
    if on_cycle:
        raise CyclicEdges(on_cycle[0], f"CyclicEdges: edge cycle through {on_cycle!r}")
    return topology


def _as_xyz(positions, n: int | None = None) -> np.ndarray:
    xyz = np.array(positions, dtype=float)
    if xyz.ndim != 2 or xyz.shape[1] != 3 or (n is not None and xyz.shape[0] != n):
        raise ValidationError(f"expected ({n or 'J'}, 3) positions, got shape {xyz.shape}")
    if not np.all(np.isfinite(xyz)):
        raise ValidationError("positions must be finite")
    xyz.flags.writeable = False
    return xyz


@dataclass(frozen=True, eq=False)
class SkeletonFrame:
    """One timestamped pose: joint names and an (J, 3) array of positions in meters."""

    t: float
    joints: tuple[str, ...]
    xyz: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "t", float(self.t))
        object.__setattr__(self, "joints", tuple(self.joints))
        if len(set(self.joints)) != len(self.joints):
            raise ValidationError("duplicate joint in frame")
        object.__setattr__(self, "xyz", _as_xyz(self.xyz, len(self.joints)))

    @classmethod
    def from_dict(cls, t: float, positions: Mapping[str, Sequence[float]]) -> "SkeletonFrame":
        names = tuple(positions)
        return cls(t, names, [positions[n] for n in names])

    @property
    def positions(self) -> dict[str, np.ndarray]:
        return {n: self.xyz[i] for i, n in enumerate(self.joints)}

    def __getitem__(self, joint: str) -> np.ndarray:
        return self.xyz[self.joints.index(joint)]

    def select(self, joints: Iterable[str]) -> np.ndarray:
        idx = [self.joints.index(j) for j in joints]
        return self.xyz[idx]


@dataclass(frozen=True)
class RecordingMeta:
    subject: str = "unknown"
    exercise: str = "other"
    camera_perspective_deg: float = 0.0
    clothing: str = ""
    repetitions: int = 1

    def __post_init__(self):
        if int(self.repetitions) < 1:
            raise ValidationError(f"repetitions must be >= 1, got {self.repetitions}")
        if not self.exercise:
            raise ValidationError("exercise must be non-empty")

    @property
    def exercise_kind(self) -> str:
        """``squat``/``situp``/``pushup``, or ``other`` for free-form exercises."""
        return self.exercise if self.exercise in EXERCISES else "other"


@dataclass(frozen=True, eq=False)
class MotionSequence:
    """Frames stored densely as ``xyz[T, J, 3]`` in topology joint order."""

    topology: SkeletonTopology
    times: np.ndarray
    xyz: np.ndarray
    meta: RecordingMeta = field(default_factory=RecordingMeta)

    def __post_init__(self):
        times = np.array(self.times, dtype=float).reshape(-1)
        xyz = np.array(self.xyz, dtype=float)
        n_joints = len(self.topology.joints)
        if xyz.shape != (times.size, n_joints, 3):
            raise ValidationError(
                f"positions shape {xyz.shape} does not match {times.size} frames x {n_joints} joints"
            )
        if not (np.all(np.isfinite(xyz)) and np.all(np.isfinite(times))):
            raise ValidationError("sequence contains non-finite values")
        if times.size > 1 and np.any(np.diff(times) <= 0):
            bad = int(np.argmax(np.diff(times) <= 0)) + 1
            raise ValidationError(f"frame timestamps must strictly increase (frame {bad})")
        times.flags.writeable = False
        xyz.flags.writeable = False
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "xyz", xyz)

    @classmethod
    def from_frames(cls, topology, frames: Sequence[SkeletonFrame], meta=None) -> "MotionSequence":
        data = np.empty((len(frames), len(topology.joints), 3))
        for k, fr in enumerate(frames):
            lookup = dict(zip(fr.joints, fr.xyz))
            missing = [j for j in topology.joints if j not in lookup]
            if missing:
                raise ValidationError(f"frame {k} lacks joint {missing[0]!r}")
            data[k] = [lookup[j] for j in topology.joints]
        return cls(topology, [f.t for f in frames], data, meta or RecordingMeta())

    def __len__(self) -> int:
        return self.times.size

    def frame(self, k: int) -> SkeletonFrame:
        return SkeletonFrame(self.times[k], self.topology.joints, self.xyz[k])

    @property
    def frames(self) -> list[SkeletonFrame]:
        return [self.frame(k) for k in range(len(self))]

    def __iter__(self) -> Iterator[SkeletonFrame]:
        return (self.frame(k) for k in range(len(self)))

    def joint_track(self, joint: str) -> np.ndarray:
        return self.xyz[:, self.topology.index(joint)]

    def replace(self, *, xyz=None, times=None, topology=None, meta=None) -> "MotionSequence":
        return MotionSequence(
            topology if topology is not None else self.topology,
            self.times if times is None else times,
            self.xyz if xyz is None else xyz,
            self.meta if meta is None else meta,
        )


@dataclass(frozen=True)
class MapRule:
    target: str
    weights: Mapping[str, float]

    def __post_init__(self):
        weights = {str(k): float(v) for k, v in dict(self.weights).items()}
        object.__setattr__(self, "weights", weights)
        if not weights:
            raise ValidationError(f"rule for {self.target!r} has no source joints")
        w = np.array(list(weights.values()))
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValidationError(f"rule for {self.target!r} has negative or non-finite weights")
        if abs(w.sum() - 1.0) > 1e-9:
            raise ValidationError(f"weights for {self.target!r} sum to {w.sum()!r}, not 1")


@dataclass(frozen=True)
class JointMap:
    """Target joints as convex combinations of source joints."""

    target: str
    rules: tuple[MapRule, ...]
    source: str | None = None

    def __post_init__(self):
        rules = tuple(r if isinstance(r, MapRule) else MapRule(*r) for r in self.rules)
        object.__setattr__(self, "rules", rules)
        seen = set()
        for r in rules:
            if r.target in seen:
                raise ValidationError(f"target joint {r.target!r} appears in more than one rule")
            seen.add(r.target)

    @classmethod
    def identity(cls, topology: SkeletonTopology) -> "JointMap":
        return cls(topology.name, tuple(MapRule(j, {j: 1.0}) for j in topology.joints), topology.name)

    @property
    def targets(self) -> tuple[str, ...]:
        return tuple(r.target for r in self.rules)

    def matrix(self, source_joints: Sequence[str], target_joints: Sequence[str] | None = None) -> np.ndarray:
        """Weight matrix W with ``target_xyz = W @ source_xyz``."""
        target_joints = self.targets if target_joints is None else tuple(target_joints)
        by_target = {r.target: r for r in self.rules}
        col = {j: i for i, j in enumerate(source_joints)}
        w = np.zeros((len(target_joints), len(source_joints)))
        for row, tj in enumerate(target_joints):
            rule = by_target.get(tj)
            if rule is None:
                raise IncompleteMap(tj, f"IncompleteMap: no rule produces target joint {tj!r}")
            for sj, weight in rule.weights.items():
                if sj not in col:
                    raise MissingSourceJoint(sj)
                w[row, col[sj]] += weight
        return w


def map_topology(frame: SkeletonFrame, joint_map: JointMap) -> SkeletonFrame:
    """Re-express ``frame`` in the map's target joints, keeping its timestamp."""
    w = joint_map.matrix(frame.joints)
    return SkeletonFrame(frame.t, joint_map.targets, w @ frame.xyz)


def map_sequence(seq: MotionSequence, joint_map: JointMap | None, target: SkeletonTopology) -> MotionSequence:
    """Vectorized :func:`map_topology` over a whole sequence, ordered as ``target``."""
    if joint_map is None:
        if seq.topology.joints != target.joints:
            raise ValidationError(
                f"no joint map from {seq.topology.name!r} to {target.name!r}"
            )
        return seq.replace(topology=target)
    w = joint_map.matrix(seq.topology.joints, target.joints)
    xyz = np.einsum("ts,fsd->ftd", w, seq.xyz)
    return MotionSequence(target, seq.times, xyz, seq.meta)
