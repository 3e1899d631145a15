"""Input validation helpers for the estimator-facing API."""

from __future__ import annotations

import numpy as np

from .geometry import check_intrinsics
from .raster import GrayImage


def check_mask(mask) -> GrayImage:
    """Accept a GrayImage or a 2-D array-like with values in [0, 1]."""
    if isinstance(mask, GrayImage):
        return mask
    arr = np.asarray(mask, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"mask must be 2-D, got shape {arr.shape}")
    return GrayImage(arr)


def check_masks(masks) -> list[GrayImage]:
    masks = list(masks)
    if not masks:
        raise ValueError("at least one mask is required")
    out = [check_mask(m) for m in masks]
    shape = None
    for m in out:
        if shape is None:
            shape = (m.height, m.width)
    return out


def check_intrinsics_list(intrinsics, n: int) -> list[np.ndarray]:
    ks = [check_intrinsics(k) for k in intrinsics]
    if len(ks) != n:
        raise ValueError(f"expected {n} intrinsic matrices, got {len(ks)}")
    return ks


def check_pose(pose) -> tuple[np.ndarray, np.ndarray]:
    r, l = pose
    r = np.asarray(r, dtype=np.float64).reshape(3)
    l = np.asarray(l, dtype=np.float64).reshape(3)
    if not (np.all(np.isfinite(r)) and np.all(np.isfinite(l))):
        raise ValueError("pose components must be finite")
    return r, l


def check_poses(poses, n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    out = [check_pose(p) for p in poses]
    if len(out) != n:
        raise ValueError(f"expected {n} start poses, got {len(out)}")
    return out
