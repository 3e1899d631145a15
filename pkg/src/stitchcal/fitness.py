"""Calibration loss: per-camera alignment, joint stitch, and their trade-off.

Both loss terms are overlap complements (1 - IoU) of thresholded rasters,
so lower is better and the total stays in [0, 1]. The per-camera term
compares each warped mask against the blurred template inside that
camera's own visibility region; the stitch term compares all warps
against each other inside the region seen by every camera.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch
from .field import PlayfieldModel
from .raster import BirdsEyeFrame, GrayImage, iou, warp_to_birdseye


@dataclass(frozen=True)
class LossWeights:
    """Trade-off between stitch quality and per-camera projection accuracy."""

    lambda_tradeoff: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.lambda_tradeoff <= 1.0:
            raise ValueError(f"lambda_tradeoff must lie in [0, 1], got {self.lambda_tradeoff}")


@dataclass(frozen=True)
class SceneInputs:
    """Everything the loss needs besides the camera poses themselves.

    Construction precomputes the per-mask summary grids and the
    thresholded template bitmap the fast loss kernel consumes.
    """

    masks: tuple[GrayImage, ...]
    intrinsics: tuple[np.ndarray, ...]
    field: PlayfieldModel
    template: GrayImage  # blurred template at the frame's resolution
    frame: BirdsEyeFrame

    def __post_init__(self):
        from ._kernels import mask_summary

        object.__setattr__(self, "masks", tuple(self.masks))
        object.__setattr__(self, "intrinsics", tuple(np.asarray(k, dtype=np.float64) for k in self.intrinsics))
        if len(self.masks) < 1:
            raise ValueError("at least one camera is required")
        if len(self.masks) != len(self.intrinsics):
            raise ValueError("each mask needs a paired intrinsic matrix")
        if (self.template.height, self.template.width) != (self.frame.height, self.frame.width):
            raise DimensionMismatch("template dimensions do not match the bird's-eye frame")
        mask_arrays = tuple(np.ascontiguousarray(m.values) for m in self.masks)
        object.__setattr__(self, "_mask_arrays", mask_arrays)
        object.__setattr__(self, "_summaries", tuple(mask_summary(a) for a in mask_arrays))
        object.__setattr__(self, "_template_lit", np.ascontiguousarray((self.template.values > 0.5).ravel().astype(np.uint8)))

    @property
    def n_cameras(self) -> int:
        return len(self.masks)


def loss_single(warped: GrayImage, vis: np.ndarray, template: GrayImage) -> float:
    """Misalignment of one warped mask against the template: 1 - IoU inside vis."""
    return 1.0 - iou(warped, template, vis)


def loss_stitch(warps: list[GrayImage], vises: list[np.ndarray]) -> float:
    """Mutual misalignment of all warps inside the jointly visible region.

    Returns 0 for a single camera (no stitch constraint) and 0 when the
    union inside the shared region is empty.
    """
    if len(warps) != len(vises):
        raise ValueError("each warp needs a visibility mask")
    if len(warps) < 2:
        return 0.0
    shape = warps[0].values.shape
    for img, vis in zip(warps, vises):
        if img.values.shape != shape or np.asarray(vis).shape != shape:
            raise DimensionMismatch("all warps and visibility masks must share dimensions")
    shared = np.logical_and.reduce([np.asarray(v, dtype=bool) for v in vises])
    lit = [img.values > 0.5 for img in warps]
    inter = np.logical_and.reduce(lit) & shared
    union = np.logical_or.reduce(lit) & shared
    denom = int(union.sum())
    if denom == 0:
        return 0.0
    return 1.0 - int(inter.sum()) / denom


def genome_length(n_cameras: int) -> int:
    return 6 * n_cameras


def encode_poses(poses) -> np.ndarray:
    """Flatten [(rotation, translation), ...] into one 6N genome vector."""
    parts = []
    for r, l in poses:
        parts.append(np.asarray(r, dtype=np.float64).reshape(3))
        parts.append(np.asarray(l, dtype=np.float64).reshape(3))
    return np.concatenate(parts)


def decode_genome(genome: np.ndarray, n_cameras: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Split a 6N genome into per-camera (rotation, translation) pairs."""
    genome = np.asarray(genome, dtype=np.float64)
    if genome.shape != (genome_length(n_cameras),):
        raise ValueError(f"genome length {genome.size} does not match {n_cameras} cameras")
    out = []
    for n in range(n_cameras):
        chunk = genome[6 * n : 6 * n + 6]
        out.append((chunk[:3].copy(), chunk[3:].copy()))
    return out


def warp_scene(genome: np.ndarray, scene: SceneInputs) -> tuple[list[GrayImage], list[np.ndarray]]:
    """Warp every camera mask under the genome's poses."""
    warps, vises = [], []
    for (r, l), mask, k in zip(decode_genome(genome, scene.n_cameras), scene.masks, scene.intrinsics):
        warped, vis = warp_to_birdseye(mask, k, r, l, scene.field, scene.frame)
        warps.append(warped)
        vises.append(vis)
    return warps, vises


def loss_total(genome: np.ndarray, scene: SceneInputs, weights: LossWeights) -> float:
    """lambda * stitch + (1 - lambda)/N * sum of per-camera losses, in [0, 1].

    Computed by the fused counting kernels; equivalent to composing
    warp_to_birdseye with loss_single and loss_stitch (the tests pin the
    two routes against each other).
    """
    from ._kernels import stitch_count, warp_count
    from .geometry import projection_matrix
    from .raster import _frame_world_points

    pts = _frame_world_points(scene.field, scene.frame)
    n_cams = scene.n_cameras
    n = pts.shape[0]
    lit = np.empty((n_cams, n), dtype=np.uint8)
    vis = np.empty((n_cams, n), dtype=np.uint8)
    single_sum = 0.0
    for c, (r, l) in enumerate(decode_genome(genome, n_cams)):
        p = projection_matrix(scene.intrinsics[c], r, l)
        inter, union = warp_count(
            scene._mask_arrays[c], scene._summaries[c], p, pts, scene._template_lit, lit[c], vis[c]
        )
        single_sum += 1.0 - inter / union if union else 0.0
    lam = weights.lambda_tradeoff
    stitch = 0.0
    if n_cams >= 2:
        s_inter, s_union = stitch_count(lit, vis)
        stitch = 1.0 - s_inter / s_union if s_union else 0.0
    return float(lam * stitch + (1.0 - lam) / n_cams * single_sum)
