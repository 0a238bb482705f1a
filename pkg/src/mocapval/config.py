"""Loading the topology / joint-map / channel configuration document."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

import yaml

from .errors import ParseError, ValidationError
from .kinematics import VERTICAL, JointAngleSpec, check_specs
from .pipeline import GRANULARITIES
from .registration import RotationConvention
from .skeleton import JointMap, MapRule, SkeletonTopology, validate_topology
from .sync import COMPARISON_MODES, DEFAULT_MAX_GAP, PAIRING_METHODS

DEFAULT_CONFIG = "default_config.yaml"


@dataclass(frozen=True)
class AnalysisConfig:
    reference_topology: str = "segments"
    estimated_topology: str = "pose17v"
    convention: RotationConvention = field(default_factory=RotationConvention)
    granularity: str = "per-frame"
    mode: str = "cross-system"
    canonicalize: bool = False
    euler_component: str = "x"
    max_gap: float = DEFAULT_MAX_GAP
    pairing: str = "linear"
    interpolate: str = "reference"
    with_scale: bool = False
    group_by: tuple[str, ...] = ()
    config_path: str | None = None

    def __post_init__(self):
        if isinstance(self.convention, str):
            object.__setattr__(self, "convention", RotationConvention.parse(self.convention))
        object.__setattr__(self, "group_by", tuple(self.group_by or ()))
        checks = [
            ("granularity", GRANULARITIES),
            ("mode", COMPARISON_MODES),
            ("pairing", PAIRING_METHODS),
            ("interpolate", ("reference", "computed")),
            ("euler_component", ("x", "y", "z")),
        ]
        for name, allowed in checks:
            if getattr(self, name) not in allowed:
                raise ValidationError(f"{name} must be one of {allowed}, got {getattr(self, name)!r}")
        if not float(self.max_gap) > 0:
            raise ValidationError(f"max_gap must be positive, got {self.max_gap}")

    def updated(self, **changes) -> "AnalysisConfig":
        return replace(self, **{k: v for k, v in changes.items() if v is not None})


@dataclass(frozen=True)
class Config:
    topologies: Mapping[str, SkeletonTopology]
    maps: tuple[JointMap, ...]
    channels: tuple[JointAngleSpec, ...]
    analysis: AnalysisConfig

    def topology(self, name: str) -> SkeletonTopology:
        try:
            return self.topologies[name]
        except KeyError:
            raise ValidationError(f"unknown topology {name!r}; have {sorted(self.topologies)}") from None

    def joint_map(self, source: str, target: str) -> JointMap | None:
        if source == target:
            return None
        for m in self.maps:
            if m.target == target and m.source == source:
                return m
        raise ValidationError(f"no joint map from {source!r} to {target!r}")


def _require(doc: Mapping, key: str, where: str):
    if key not in doc:
        raise ValidationError(f"{where}: missing field {key!r}")
    return doc[key]


def _topology(doc: Mapping) -> SkeletonTopology:
    name = _require(doc, "name", "topology")
    topo = SkeletonTopology(
        name=str(name),
        joints=[str(j) for j in _require(doc, "joints", f"topology {name}")],
        edges=[tuple(map(str, e)) for e in doc.get("edges", [])],
        anchors={str(k): str(v) for k, v in _require(doc, "anchors", f"topology {name}").items()},
    )
    return validate_topology(topo)


def _joint_map(doc: Mapping) -> JointMap:
    rules = []
    for r in _require(doc, "rules", "map"):
        rules.append(MapRule(str(_require(r, "target", "map rule")), _require(r, "weights", "map rule")))
    return JointMap(str(_require(doc, "target", "map")), tuple(rules), doc.get("source"))


def _channel(doc: Mapping) -> JointAngleSpec:
    name = str(_require(doc, "channel", "channel"))
    distal = _require(doc, "distal", f"channel {name}")
    return JointAngleSpec(
        channel=name,
        proximal=tuple(_require(doc, "proximal", f"channel {name}")),
        distal=VERTICAL if distal == VERTICAL else tuple(distal),
        neutralized_axis=str(doc.get("neutralized_axis", "Y")),
        neutral_offset=float(doc.get("neutral_offset", 0.0)),
        vertical_axis=str(doc.get("vertical_axis", "Z")),
    )


def parse_config(doc: Mapping[str, Any], path: str | None = None) -> Config:
    if not isinstance(doc, Mapping):
        raise ValidationError("configuration document must be a mapping")
    topologies = {}
    for t in doc.get("topology", []):
        topo = _topology(t)
        if topo.name in topologies:
            raise ValidationError(f"topology {topo.name!r} defined twice")
        topologies[topo.name] = topo
    maps = tuple(_joint_map(m) for m in doc.get("map", []))
    for m in maps:
        target = topologies.get(m.target)
        if target is None:
            raise ValidationError(f"map targets unknown topology {m.target!r}")
        source = topologies.get(m.source) if m.source else None
        if m.source and source is None:
            raise ValidationError(f"map reads unknown topology {m.source!r}")
        # raises IncompleteMap / MissingSourceJoint
        m.matrix(source.joints if source else sorted({j for r in m.rules for j in r.weights}),
                 target.joints)
    channels = tuple(_channel(c) for c in doc.get("channels", []))
    check_specs(channels)
    analysis = AnalysisConfig(**{**dict(doc.get("analysis") or {}), "config_path": path})
    config = Config(topologies, maps, channels, analysis)
    for name in (analysis.reference_topology, analysis.estimated_topology):
        if topologies and name not in topologies:
            raise ValidationError(f"analysis refers to unknown topology {name!r}")
    return config


def load_config(path: str | Path | None = None) -> Config:
    """Read a configuration document (YAML or JSON); ``None`` loads the bundled default."""
    if path is None:
        text = resources.files("mocapval.data").joinpath(DEFAULT_CONFIG).read_text(encoding="utf-8")
        source = f"<bundled {DEFAULT_CONFIG}>"
    else:
        p = Path(path)
        if not p.is_file():
            raise ValidationError(f"config file not found: {p}")
        text = p.read_text(encoding="utf-8")
        source = str(p)
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ParseError(mark.line + 1 if mark else None, f"invalid config: {exc}", source) from None
    try:
        return parse_config(doc or {}, source)
    except TypeError as exc:
        raise ValidationError(f"{source}: malformed field: {exc}") from None


def default_channels() -> tuple[JointAngleSpec, ...]:
    return load_config().channels
