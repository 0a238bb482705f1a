"""Validate camera-based skeleton joint angles against a reference motion-capture system."""

__version__ = "0.1.0"

from .anomaly import AnomalyEvent, EulerSeries, canonicalize, detect_flips
from .config import AnalysisConfig, Config, load_config
from .errors import EmptyResultError, MocapValError, ValidationError
from .io import (
    read_angle_stream,
    read_euler_stream,
    read_skeleton_stream,
    write_angle_stream,
    write_euler_stream,
    write_skeleton_stream,
)
from .kinematics import CHANNEL_ORDER, FlexionSeries, JointAngleSpec, flexion_series, hinge_flexion
from .pipeline import align_to_reference, compare_channels, skeleton_flexion
from .registration import (
    EulerAngles,
    RigidTransform,
    RotationConvention,
    euler_to_rotation,
    normalize,
    rigid_align,
    rotation_to_euler,
)
from .report import emit_plot, emit_report
from .skeleton import JointMap, MotionSequence, RecordingMeta, SkeletonFrame, SkeletonTopology
from .sync import DeviationReport, DeviationStats, aggregate, group_report, pair_streams
from .synth import MotionProfile, Perturbation, forward_skeleton, generate_trajectory, perturb
