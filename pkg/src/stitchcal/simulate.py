"""Synthetic scene oracle and evaluation metrics.

Ground-truth camera masks are produced by exact inverse rendering: every
(supersampled) camera pixel is ray-cast onto the crowned field surface and
painted when the hit point lies on a marking, so line widths are preserved
in world units at any viewing distance. The same ray/surface intersection
backs the stitch metric.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import degrees

import numpy as np

from .errors import BehindCamera
from .field import MarkingSet, PlayfieldModel
from .geometry import (
    MIN_DEPTH,
    cast_ray,
    cast_rays,
    check_intrinsics,
    matrix_to_rodrigues,
    project_point,
    projection_matrix,
    rodrigues_to_matrix,
)
from .raster import BirdsEyeFrame, GrayImage, iou, warp_to_birdseye

Pose = tuple[np.ndarray, np.ndarray]  # (rotation vector, translation vector)

_RAY_EPS = 1e-12
_PLANE_TOL = 1e-9


@dataclass(frozen=True)
class CameraModel:
    """One camera: intrinsics, pose, and image size in pixels."""

    k: np.ndarray
    rotation: np.ndarray
    translation: np.ndarray
    width: int
    height: int

    def __post_init__(self):
        object.__setattr__(self, "k", check_intrinsics(self.k))
        object.__setattr__(self, "rotation", np.asarray(self.rotation, dtype=np.float64).reshape(3))
        object.__setattr__(self, "translation", np.asarray(self.translation, dtype=np.float64).reshape(3))
        if self.width <= 0 or self.height <= 0:
            raise ValueError("image size must be positive")
        cx, cy = self.k[0, 2], self.k[1, 2]
        if not (0 <= cx <= self.width - 1 and 0 <= cy <= self.height - 1):
            raise ValueError("principal point must lie inside the image")

    @property
    def pose(self) -> Pose:
        return self.rotation, self.translation

    def with_pose(self, rotation, translation) -> "CameraModel":
        return CameraModel(self.k, rotation, translation, self.width, self.height)

    def projection(self) -> np.ndarray:
        return projection_matrix(self.k, self.rotation, self.translation)


@dataclass(frozen=True)
class SceneTruth:
    """Ground-truth rig plus the outdated poses a calibration run starts from."""

    field: PlayfieldModel
    cameras: tuple[CameraModel, ...]
    start_poses: tuple[Pose, ...]

    def __post_init__(self):
        object.__setattr__(self, "cameras", tuple(self.cameras))
        object.__setattr__(
            self,
            "start_poses",
            tuple(
                (np.asarray(r, dtype=np.float64).reshape(3), np.asarray(l, dtype=np.float64).reshape(3))
                for r, l in self.start_poses
            ),
        )
        if len(self.cameras) < 1:
            raise ValueError("a scene needs at least one camera")
        if len(self.start_poses) != len(self.cameras):
            raise ValueError("each camera needs a start pose")
        center = self.field.center()
        for i, cam in enumerate(self.cameras):
            u, v = project_point(cam.projection(), center)  # raises BehindCamera
            if not (0 <= u <= cam.width - 1 and 0 <= v <= cam.height - 1):
                raise ValueError(f"camera {i} does not see the field center")

    @property
    def n_cameras(self) -> int:
        return len(self.cameras)

    def truth_poses(self) -> list[Pose]:
        return [cam.pose for cam in self.cameras]


@dataclass(frozen=True)
class DriftSpec:
    """Per-axis Gaussian pose drift, optionally with fixed offsets."""

    sigma_translation: float = 0.0
    sigma_rotation: float = 0.0
    offset_rotation: np.ndarray | None = None
    offset_translation: np.ndarray | None = None

    def __post_init__(self):
        if self.sigma_translation < 0 or self.sigma_rotation < 0:
            raise ValueError("drift sigmas must be non-negative")
        for name in ("offset_rotation", "offset_translation"):
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(self, name, np.asarray(value, dtype=np.float64).reshape(3))


def apply_drift(pose: Pose, spec: DriftSpec, rng: np.random.Generator) -> Pose:
    """Corrupt one pose with the spec's Gaussian noise and fixed offsets."""
    r = np.asarray(pose[0], dtype=np.float64).copy()
    l = np.asarray(pose[1], dtype=np.float64).copy()
    r += rng.normal(0.0, 1.0, 3) * spec.sigma_rotation
    l += rng.normal(0.0, 1.0, 3) * spec.sigma_translation
    if spec.offset_rotation is not None:
        r += spec.offset_rotation
    if spec.offset_translation is not None:
        l += spec.offset_translation
    return r, l


def make_lookat_pose(position, target, roll_up=(0.0, 0.0, 1.0)) -> Pose:
    """Pose of a camera at ``position`` looking at ``target`` with horizontal image rows."""
    position = np.asarray(position, dtype=np.float64)
    forward = np.asarray(target, dtype=np.float64) - position
    forward = forward / np.linalg.norm(forward)
    right = np.cross(forward, np.asarray(roll_up, dtype=np.float64))
    norm = np.linalg.norm(right)
    if norm < 1e-12:
        raise ValueError("view direction is parallel to the up vector")
    right /= norm
    down = np.cross(forward, right)
    rot = np.vstack([right, down, forward])
    return matrix_to_rodrigues(rot), -rot @ position


# ---------------------------------------------------------------------------
# Ray / crowned-surface intersection


def intersect_rays_with_surface(
    origin: np.ndarray, directions: np.ndarray, field: PlayfieldModel
) -> tuple[np.ndarray, np.ndarray]:
    """Nearest forward intersection of rays with the min-of-planes surface.

    Each of the four planes is intersected analytically; a candidate is
    accepted only where its plane attains the surface minimum (within
    1e-9 m), and the smallest positive ray parameter wins. Returns
    (points (n, 3), valid (n,)); invalid rows contain NaN.
    """
    o = np.asarray(origin, dtype=np.float64).reshape(3)
    d = np.asarray(directions, dtype=np.float64).reshape(-1, 3)
    coeff = field.plane_coefficients()
    best_t = np.full(d.shape[0], np.inf)
    for a, b, c in coeff:
        denom = d[:, 2] - a * d[:, 0] - b * d[:, 1]
        numer = a * o[0] + b * o[1] + c - o[2]
        with np.errstate(divide="ignore", invalid="ignore"):
            t = numer / denom
        usable = (np.abs(denom) > _RAY_EPS) & (t > _RAY_EPS)
        if not usable.any():
            continue
        x = o[0] + t * d[:, 0]
        y = o[1] + t * d[:, 1]
        z = o[2] + t * d[:, 2]
        minimal = np.full(t.shape, True)
        for a2, b2, c2 in coeff:
            if a2 == a and b2 == b and c2 == c:
                continue
            minimal &= z <= a2 * x + b2 * y + c2 + _PLANE_TOL
        accept = usable & minimal & (t < best_t)
        best_t = np.where(accept, t, best_t)
    valid = np.isfinite(best_t)
    t_safe = np.where(valid, best_t, np.nan)
    return o[None, :] + t_safe[:, None] * d, valid


def intersect_ray_with_surface(ray, field: PlayfieldModel) -> np.ndarray:
    """Single-ray wrapper; raises BehindCamera when the ray misses the surface."""
    pts, valid = intersect_rays_with_surface(ray.origin, ray.direction[None, :], field)
    if not valid[0]:
        raise BehindCamera("ray does not hit the field surface in front of the camera")
    return pts[0]


# ---------------------------------------------------------------------------
# Ground-truth mask rendering

_RENDER_SUPERSAMPLE = 2
_RENDER_CHUNK_ROWS = 128


def render_mask(field: PlayfieldModel, markings: MarkingSet, cam: CameraModel) -> GrayImage:
    """Binary camera-frame image of the markings painted on the field surface.

    Supersampled 2x per axis and thresholded at 0.5, matching the
    template rasterizer.
    """
    ss = _RENDER_SUPERSAMPLE
    w, h = cam.width, cam.height
    us = (np.arange(w * ss) + 0.5) / ss - 0.5
    out = np.empty((h, w))
    for row0 in range(0, h, _RENDER_CHUNK_ROWS):
        row1 = min(row0 + _RENDER_CHUNK_ROWS, h)
        vs = (np.arange(row0 * ss, row1 * ss) + 0.5) / ss - 0.5
        gu, gv = np.meshgrid(us, vs)
        pixels = np.column_stack([gu.ravel(), gv.ravel()])
        origin, dirs = cast_rays(cam.k, cam.rotation, cam.translation, pixels)
        pts, valid = intersect_rays_with_surface(origin, dirs, field)
        painted = np.zeros(len(pixels), dtype=bool)
        if valid.any():
            painted[valid] = markings.coverage(pts[valid, 0], pts[valid, 1])
        sub = painted.reshape(row1 - row0, ss, w, ss).astype(np.float64)
        out[row0:row1] = (sub.mean(axis=(1, 3)) >= 0.5).astype(np.float64)
    return GrayImage(out)


# ---------------------------------------------------------------------------
# Evaluation metrics


def _check_pose_lists(estimated, truth) -> None:
    if len(estimated) != len(truth):
        raise ValueError("estimated and ground-truth pose counts differ")


def metric_stitch(
    estimated_poses,
    scene: SceneTruth,
    frame: BirdsEyeFrame,
    estimator_field: PlayfieldModel | None = None,
) -> float:
    """Bird's-eye pixel distance between the two cameras' placements of the field center.

    The center is observed through each ground-truth camera, then mapped
    back to the world through the *estimated* calibration (ray cast plus
    field-surface intersection), exactly the way the stitched view places
    it. Pairwise by construction, so exactly two cameras are required.
    """
    if scene.n_cameras != 2 or len(estimated_poses) != 2:
        raise ValueError("the stitch metric is defined for exactly two cameras")
    surface = estimator_field if estimator_field is not None else scene.field
    center = scene.field.center()
    placed = []
    for cam, (r_est, l_est) in zip(scene.cameras, estimated_poses):
        u, v = project_point(cam.projection(), center)
        ray = cast_ray(cam.k, r_est, l_est, (u, v))
        placed.append(intersect_ray_with_surface(ray, surface)[:2])
    return float(np.linalg.norm(placed[0] - placed[1]) / frame.resolution)


def metric_tre(estimated_poses, truth_poses) -> float:
    """Mean translation error in centimeters."""
    _check_pose_lists(estimated_poses, truth_poses)
    dists = [
        np.linalg.norm(np.asarray(le, dtype=np.float64) - np.asarray(lt, dtype=np.float64))
        for (_, le), (_, lt) in zip(estimated_poses, truth_poses)
    ]
    return float(np.mean(dists) * 100.0)


def _vector_angle_deg(r_est: np.ndarray, r_gt: np.ndarray) -> float:
    ne, ng = np.linalg.norm(r_est), np.linalg.norm(r_gt)
    if ne < 1e-12 and ng < 1e-12:
        return 0.0
    if ne < 1e-12 or ng < 1e-12:
        # Angle between a zero vector and anything is undefined; fall back
        # to the geodesic rotation angle (here just the nonzero norm).
        rel = rodrigues_to_matrix(r_est) @ rodrigues_to_matrix(r_gt).T
        return degrees(float(np.linalg.norm(matrix_to_rodrigues(rel))))
    cosang = np.clip(np.dot(r_est, r_gt) / (ne * ng), -1.0, 1.0)
    return degrees(float(np.arccos(cosang)))


def metric_roe(estimated_poses, truth_poses) -> float:
    """Mean angle (degrees) between estimated and true rotation vectors."""
    _check_pose_lists(estimated_poses, truth_poses)
    angles = [_vector_angle_deg(re, rt) for (re, _), (rt, _) in zip(estimated_poses, truth_poses)]
    return float(np.mean(angles))


def metric_roe_geodesic(estimated_poses, truth_poses) -> float:
    """Mean geodesic rotation distance (degrees); reported alongside metric_roe."""
    _check_pose_lists(estimated_poses, truth_poses)
    angles = []
    for (re, _), (rt, _) in zip(estimated_poses, truth_poses):
        rel = rodrigues_to_matrix(re) @ rodrigues_to_matrix(rt).T
        angles.append(degrees(float(np.linalg.norm(matrix_to_rodrigues(rel)))))
    return float(np.mean(angles))


def metric_iou(
    estimated_poses,
    scene: SceneTruth,
    frame: BirdsEyeFrame,
    template: GrayImage,
    masks,
    estimator_field: PlayfieldModel | None = None,
) -> float:
    """Mean per-camera IoU (percent) of warped masks against the binary template.

    ``masks`` are the ground-truth camera masks; each is warped through its
    *estimated* pose and compared inside its own visibility region.
    """
    if len(estimated_poses) != scene.n_cameras or len(masks) != scene.n_cameras:
        raise ValueError("pose and mask counts must match the scene")
    surface = estimator_field if estimator_field is not None else scene.field
    scores = []
    for cam, mask, (r_est, l_est) in zip(scene.cameras, masks, estimated_poses):
        warped, vis = warp_to_birdseye(mask, cam.k, r_est, l_est, surface, frame)
        scores.append(iou(warped, template, vis))
    return float(np.mean(scores) * 100.0)


# ---------------------------------------------------------------------------
# Default synthetic rig

DEFAULT_IMAGE_WIDTH = 1920
DEFAULT_IMAGE_HEIGHT = 1080
DEFAULT_FOCAL_PX = 1250.0
CAMERA_SPACING = 2.0  # meters between the two mounts
CAMERA_SETBACK = 10.0  # meters behind the touchline
CAMERA_HEIGHT = 12.0  # meters above the corner plane
TARGET_ADVANCE = 21.0  # how far into each half the cameras aim


def default_cameras(
    field: PlayfieldModel,
    image_width: int = DEFAULT_IMAGE_WIDTH,
    image_height: int = DEFAULT_IMAGE_HEIGHT,
    focal_px: float = DEFAULT_FOCAL_PX,
) -> list[CameraModel]:
    """Two cameras behind the halfway line aimed at opposite halves.

    They share the center-circle area but have distinct projection
    centers, so flat-field stitching would exhibit parallax.
    """
    from .geometry import intrinsics_matrix

    k = intrinsics_matrix(focal_px, focal_px, (image_width - 1) / 2.0, (image_height - 1) / 2.0)
    mid, half_w = field.length_m / 2.0, field.width_m / 2.0
    rigs = [
        ((mid - CAMERA_SPACING / 2.0, -CAMERA_SETBACK, CAMERA_HEIGHT), (mid - TARGET_ADVANCE, half_w, 0.0)),
        ((mid + CAMERA_SPACING / 2.0, -CAMERA_SETBACK, CAMERA_HEIGHT), (mid + TARGET_ADVANCE, half_w, 0.0)),
    ]
    cams = []
    for position, target in rigs:
        r, l = make_lookat_pose(position, target)
        cams.append(CameraModel(k, r, l, image_width, image_height))
    return cams


def drifted_scene(field: PlayfieldModel, cameras, spec: DriftSpec, rng: np.random.Generator) -> SceneTruth:
    """Scene whose start poses are the true poses corrupted by ``spec``."""
    starts = [apply_drift(cam.pose, spec, rng) for cam in cameras]
    return SceneTruth(field=field, cameras=tuple(cameras), start_poses=tuple(starts))
