"""Stitch-aware multi-camera extrinsic calibration over a crowned sports field."""

from .errors import (
    BehindCamera,
    ConfigError,
    DimensionMismatch,
    DimensionsOutOfRange,
    LengthMismatch,
    NotARotation,
    OutOfField,
    OutOfImage,
    StitchcalError,
)
from .evolve import ESConfig, EvolveTrace, Individual, evolve
from .field import BlurSpec, MarkingSet, PlayfieldModel, blurred_template, render_template, standard_markings
from .fitness import LossWeights, SceneInputs, loss_single, loss_stitch, loss_total
from .geometry import (
    camera_center,
    canonicalize_rotation,
    cast_ray,
    intrinsics_matrix,
    matrix_to_rodrigues,
    project_point,
    projection_matrix,
    rodrigues_to_matrix,
)
from .raster import BirdsEyeFrame, GrayImage, count_above, iou, sample_bilinear, warp_to_birdseye
from .simulate import (
    CameraModel,
    DriftSpec,
    SceneTruth,
    apply_drift,
    make_lookat_pose,
    metric_iou,
    metric_roe,
    metric_stitch,
    metric_tre,
    render_mask,
)

__version__ = "0.1.0"

__all__ = [
    "BehindCamera",
    "BirdsEyeFrame",
    "BlurSpec",
    "CameraModel",
    "ConfigError",
    "DimensionMismatch",
    "DimensionsOutOfRange",
    "DriftSpec",
    "ESConfig",
    "EvolveTrace",
    "GrayImage",
    "Individual",
    "LengthMismatch",
    "LossWeights",
    "MarkingSet",
    "NotARotation",
    "OutOfField",
    "OutOfImage",
    "PlayfieldModel",
    "SceneInputs",
    "SceneTruth",
    "StitchcalError",
    "apply_drift",
    "blurred_template",
    "camera_center",
    "canonicalize_rotation",
    "cast_ray",
    "count_above",
    "evolve",
    "intrinsics_matrix",
    "iou",
    "loss_single",
    "loss_stitch",
    "loss_total",
    "make_lookat_pose",
    "matrix_to_rodrigues",
    "metric_iou",
    "metric_roe",
    "metric_stitch",
    "metric_tre",
    "project_point",
    "projection_matrix",
    "render_mask",
    "render_template",
    "rodrigues_to_matrix",
    "sample_bilinear",
    "standard_markings",
    "warp_to_birdseye",
]
