"""Parametric hand machinery: mesh synthesis, analytical IK, penetration analysis."""

from .rotations import (
    Rotation,
    align_vectors,
    normalize_angle,
    rotation_from_axis_angle,
    swing_twist_decompose,
)
from .model import (
    HandModelSpec,
    Mesh,
    Pose,
    Shape,
    forward,
    regress_joints,
    rest_joints,
    rest_pose_gap,
    sample_pose,
    shaped_template,
)
from .synthetic import generate_synthetic_model, icosphere

__version__ = "0.1.0"
