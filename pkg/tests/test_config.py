import pytest

from mocapval.config import AnalysisConfig, load_config, parse_config
from mocapval.errors import IncompleteMap, ParseError, TopologyError, ValidationError
from mocapval.kinematics import CHANNEL_ORDER
from mocapval.registration import RotationConvention


def test_bundled_defaults(config):
    assert set(config.topologies) == {"pose17", "pose17v", "segments"}
    assert len(config.topology("pose17").joints) == 17
    assert [c.channel for c in config.channels] == list(CHANNEL_ORDER)
    ankles = [c for c in config.channels if c.channel.startswith("ankle")]
    assert all(c.neutral_offset == 90 for c in ankles)
    assert all(c.neutralized_axis == "Y" for c in config.channels)
    assert config.analysis.convention == RotationConvention("ZXY", "intrinsic")
    assert config.joint_map("pose17v", "segments") is not None
    assert config.joint_map("segments", "segments") is None


def test_analysis_enums():
    with pytest.raises(ValidationError):
        AnalysisConfig(granularity="per-second")
    with pytest.raises(ValidationError):
        AnalysisConfig(mode="vibes")
    with pytest.raises(ValidationError):
        AnalysisConfig(max_gap=0)
    assert AnalysisConfig(convention="extrinsic:XYZ").convention.mode == "extrinsic"


def test_config_file_round_trip(tmp_path):
    doc = """
topology:
  - name: tiny
    joints: [a, b, c, d, e]
    edges: [[a, b], [b, c]]
    anchors: {left_shoulder: a, right_shoulder: b, left_hip: c, right_hip: d}
channels:
  - {channel: bend, proximal: [a, b], distal: [b, c]}
analysis:
  reference_topology: tiny
  estimated_topology: tiny
  mode: self-consistency
"""
    (tmp_path / "c.yaml").write_text(doc)
    cfg = load_config(tmp_path / "c.yaml")
    assert cfg.channels[0].channel == "bend"
    assert cfg.analysis.mode == "self-consistency"


def test_bad_documents(tmp_path):
    with pytest.raises(ValidationError):
        load_config(tmp_path / "missing.yaml")
    (tmp_path / "broken.yaml").write_text("topology: [\n")
    with pytest.raises(ParseError):
        load_config(tmp_path / "broken.yaml")
    with pytest.raises(TopologyError):
        parse_config({"topology": [{"name": "t", "joints": ["a"], "edges": [["a", "z"]], "anchors": {}}]})
    topo = {"name": "t", "joints": ["a", "b", "c", "d"],
            "anchors": {"left_shoulder": "a", "right_shoulder": "b", "left_hip": "c", "right_hip": "d"}}
    incomplete = {"topology": [topo], "map": [{"target": "t", "rules": [{"target": "a", "weights": {"x": 1}}]}],
                  "analysis": {"reference_topology": "t", "estimated_topology": "t"}}
    with pytest.raises(IncompleteMap):
        parse_config(incomplete)
    with pytest.raises(ValidationError):
        parse_config({"topology": [topo], "analysis": {"reference_topology": "nope"}})
