import numpy as np
import pytest
from hypothesis import given, strategies as st

from mocapval.errors import (
    CyclicEdges,
    DanglingEdge,
    DuplicateJoint,
    IncompleteMap,
    MissingAnchor,
    MissingSourceJoint,
    ValidationError,
)
from mocapval.skeleton import (
    ANCHOR_ROLES,
    JointMap,
    MapRule,
    MotionSequence,
    RecordingMeta,
    SkeletonFrame,
    SkeletonTopology,
    map_sequence,
    map_topology,
    validate_topology,
)

CHAIN17 = [f"j{k}" for k in range(17)]
ANCHORS = {"left_shoulder": "j3", "right_shoulder": "j4", "left_hip": "j8", "right_hip": "j9"}


def chain(joints=CHAIN17, anchors=ANCHORS, edges=None):
    if edges is None:
        edges = list(zip(joints[:-1], joints[1:]))
    return SkeletonTopology("t", joints, edges, anchors)


def test_chain_topology_is_valid():
    topo = validate_topology(chain())
    assert len(topo.joints) == 17
    assert topo.anchor_joints == ("j3", "j4", "j8", "j9")


def test_dangling_edge_names_joint():
    with pytest.raises(DanglingEdge) as err:
        validate_topology(chain(edges=[("j0", "j1"), ("j1", "toe_X")]))
    assert err.value.name == "toe_X"


def test_shared_hip_anchor_rejected():
    with pytest.raises(MissingAnchor):
        validate_topology(chain(anchors={**ANCHORS, "right_hip": "j8"}))


def test_undeclared_anchor_rejected():
    with pytest.raises(MissingAnchor):
        validate_topology(chain(anchors={**ANCHORS, "left_hip": "nope"}))


def test_missing_anchor_role_rejected():
    anchors = dict(ANCHORS)
    del anchors["left_hip"]
    with pytest.raises(MissingAnchor):
        validate_topology(chain(anchors=anchors))


def test_duplicate_joint_rejected():
    with pytest.raises(DuplicateJoint) as err:
        validate_topology(chain(joints=CHAIN17 + ["j2"]))
    assert err.value.name == "j2"


def test_cycle_rejected():
    edges = list(zip(CHAIN17[:-1], CHAIN17[1:])) + [("j16", "j0")]
    with pytest.raises(CyclicEdges):
        validate_topology(chain(edges=edges))


def _brute_force_valid(joints, edges, anchors):
    """Independent restatement of the topology rules."""
    if len(set(joints)) != len(joints):
        return False
    if any(a not in joints or b not in joints for a, b in edges):
        return False
    if set(anchors) != set(ANCHOR_ROLES):
        return False
    vals = list(anchors.values())
    if any(v not in joints for v in vals) or len(set(vals)) != 4:
        return False
    # cycle check by repeated removal of nodes without incoming edges
    remaining = set(joints)
    live = list(edges)
    while True:
        sources = {n for n in remaining if all(b != n for _, b in live)}
        if not sources:
            break
        remaining -= sources
        live = [(a, b) for a, b in live if a in remaining]
    return not remaining


names = st.sampled_from([f"n{k}" for k in range(7)])


@given(
    joints=st.lists(names, min_size=1, max_size=8),
    edges=st.lists(st.tuples(names, names), max_size=8),
    anchor_vals=st.lists(names, min_size=4, max_size=4),
)
def test_validation_matches_brute_force(joints, edges, anchor_vals):
    anchors = dict(zip(ANCHOR_ROLES, anchor_vals))
    expected = _brute_force_valid(joints, edges, anchors)
    try:
        validate_topology(SkeletonTopology("t", joints, edges, anchors))
        ok = True
    except ValidationError:
        ok = False
    assert ok == expected


# ---------------------------------------------------------------------------
# frames and maps
# ---------------------------------------------------------------------------


def test_identity_map_leaves_frame_unchanged(rng):
    topo = chain()
    frame = SkeletonFrame(0.5, topo.joints, rng.normal(size=(17, 3)))
    out = map_topology(frame, JointMap.identity(topo))
    assert out.t == 0.5
    assert np.array_equal(out.xyz, frame.xyz)


def test_midpoint_rule():
    frame = SkeletonFrame.from_dict(1.0, {"a": (0, 0, 0), "b": (2, 0, 0)})
    jm = JointMap("mid", (MapRule("hip_center", {"a": 0.5, "b": 0.5}),))
    out = map_topology(frame, jm)
    assert out.joints == ("hip_center",)
    assert np.allclose(out["hip_center"], (1, 0, 0), atol=1e-12)
    assert out.t == 1.0


def test_absent_source_joint():
    frame = SkeletonFrame.from_dict(0.0, {"a": (0, 0, 0)})
    jm = JointMap("x", (MapRule("c", {"spine4": 1.0}),))
    with pytest.raises(MissingSourceJoint) as err:
        map_topology(frame, jm)
    assert err.value.name == "spine4"


def test_rule_weights_must_sum_to_one():
    with pytest.raises(ValidationError):
        MapRule("c", {"a": 0.5, "b": 0.4})
    with pytest.raises(ValidationError):
        MapRule("c", {"a": 1.5, "b": -0.5})


def test_target_joint_needs_exactly_one_rule():
    with pytest.raises(ValidationError):
        JointMap("x", (MapRule("c", {"a": 1.0}), MapRule("c", {"b": 1.0})))


def test_incomplete_map_for_target_topology():
    jm = JointMap("x", (MapRule("c", {"a": 1.0}),))
    with pytest.raises(IncompleteMap):
        jm.matrix(["a"], ["c", "d"])


@given(s=st.floats(-100, 100).filter(lambda v: abs(v) > 1e-6), seed=st.integers(0, 2**31))
def test_map_is_linear(s, seed):
    r = np.random.default_rng(seed)
    joints = ("a", "b", "c")
    w = r.dirichlet(np.ones(3))
    w = w / w.sum()
    jm = JointMap("x", (MapRule("m", dict(zip(joints, w.tolist()))), MapRule("a2", {"a": 1.0})))
    xyz = r.normal(size=(3, 3))
    base = map_topology(SkeletonFrame(0.0, joints, xyz), jm).xyz
    scaled = map_topology(SkeletonFrame(0.0, joints, s * xyz), jm).xyz
    assert np.allclose(scaled, s * base, rtol=0, atol=1e-9 * max(1.0, abs(s)))


def test_frame_rejects_nonfinite():
    with pytest.raises(ValidationError):
        SkeletonFrame(0.0, ("a",), [[0.0, np.nan, 0.0]])


def test_sequence_requires_increasing_times():
    topo = chain()
    xyz = np.zeros((2, 17, 3))
    with pytest.raises(ValidationError):
        MotionSequence(topo, [1.0, 0.5], xyz)


def test_meta_repetitions_positive():
    with pytest.raises(ValidationError):
        RecordingMeta(repetitions=0)
    assert RecordingMeta(exercise="plank").exercise_kind == "other"


def test_map_sequence_matches_per_frame_map(config, rng):
    src = config.topology("pose17v")
    dst = config.topology("segments")
    jm = config.joint_map("pose17v", "segments")
    seq = MotionSequence(src, [0.0, 0.1, 0.2], rng.normal(size=(3, len(src.joints), 3)))
    mapped = map_sequence(seq, jm, dst)
    for k, frame in enumerate(seq.frames):
        single = map_topology(frame, jm)
        order = [single.joints.index(j) for j in dst.joints]
        assert np.allclose(mapped.xyz[k], single.xyz[order], atol=1e-12)
