"""Rotation representations, projection matrices, and pixel/world ray casting.

Conventions used throughout the package:

* World frame: x along the field length, y along the field width, z up,
  origin at one field corner. Units are meters.
* Camera frame: x right, y down, z forward (optical axis). A world point X
  maps into the camera frame as ``x_cam = R @ X + l``, so the camera center
  in world coordinates is ``C = -R.T @ l``.
* Rotations are stored as axis-angle 3-vectors (direction = axis,
  norm = angle in radians).
* Pixel coordinates are continuous, with (0, 0) at the center of the
  top-left pixel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BehindCamera, NotARotation

# Depth below this is treated as "behind the camera" for projections.
MIN_DEPTH = 1e-9

_SMALL_ANGLE = 1e-8


def _as_vec3(v) -> np.ndarray:
    a = np.asarray(v, dtype=np.float64).reshape(3)
    if not np.all(np.isfinite(a)):
        raise ValueError(f"expected a finite 3-vector, got {v!r}")
    return a


def _skew(v: np.ndarray) -> np.ndarray:
    return np.array(
        [
            [0.0, -v[2], v[1]],
            [v[2], 0.0, -v[0]],
            [-v[1], v[0], 0.0],
        ]
    )


def canonicalize_rotation(r) -> np.ndarray:
    """Wrap an axis-angle vector so its norm (the angle) lies in [0, 2*pi)."""
    r = _as_vec3(r)
    theta = float(np.linalg.norm(r))
    if theta < 2.0 * np.pi:
        return r
    wrapped = np.fmod(theta, 2.0 * np.pi)
    return r * (wrapped / theta)


def rodrigues_to_matrix(r) -> np.ndarray:
    """Convert an axis-angle vector to a 3x3 rotation matrix.

    Uses the closed-form expansion R = I + sin(t)*K + (1-cos(t))*K^2 with
    K = skew(axis). Below ``_SMALL_ANGLE`` the sin/cos coefficients are
    replaced by their second-order Taylor expansion to avoid 0/0.
    """
    r = _as_vec3(r)
    theta = float(np.linalg.norm(r))
    if theta < _SMALL_ANGLE:
        # R ~ I + skew(r) + skew(r)^2 / 2, exact to second order in r.
        k = _skew(r)
        return np.eye(3) + k + 0.5 * (k @ k)
    k = _skew(r / theta)
    return np.eye(3) + np.sin(theta) * k + (1.0 - np.cos(theta)) * (k @ k)


def matrix_to_rodrigues(matrix) -> np.ndarray:
    """Convert a rotation matrix back to an axis-angle vector with angle in [0, pi].

    Goes through the quaternion (largest-component extraction), which stays
    uniformly accurate at all angles including near 0 and pi. Raises
    NotARotation when the input is not orthonormal with determinant +1
    (checked to 1e-6).
    """
    m = np.asarray(matrix, dtype=np.float64)
    if m.shape != (3, 3):
        raise NotARotation(f"expected a 3x3 matrix, got shape {m.shape}")
    if not np.allclose(m @ m.T, np.eye(3), atol=1e-6) or abs(np.linalg.det(m) - 1.0) > 1e-6:
        raise NotARotation("matrix is not orthonormal with determinant +1")

    tr = float(np.trace(m))
    if tr >= m[0, 0] and tr >= m[1, 1] and tr >= m[2, 2]:
        s = 2.0 * np.sqrt(1.0 + tr)
        w = 0.25 * s
        v = np.array([m[2, 1] - m[1, 2], m[0, 2] - m[2, 0], m[1, 0] - m[0, 1]]) / s
    elif m[0, 0] >= m[1, 1] and m[0, 0] >= m[2, 2]:
        s = 2.0 * np.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2])
        w = (m[2, 1] - m[1, 2]) / s
        v = np.array([0.25 * s, (m[0, 1] + m[1, 0]) / s, (m[0, 2] + m[2, 0]) / s])
    elif m[1, 1] >= m[2, 2]:
        s = 2.0 * np.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2])
        w = (m[0, 2] - m[2, 0]) / s
        v = np.array([(m[0, 1] + m[1, 0]) / s, 0.25 * s, (m[1, 2] + m[2, 1]) / s])
    else:
        s = 2.0 * np.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1])
        w = (m[1, 0] - m[0, 1]) / s
        v = np.array([(m[0, 2] + m[2, 0]) / s, (m[1, 2] + m[2, 1]) / s, 0.25 * s])

    if w < 0.0:  # same rotation, but keeps the angle in [0, pi]
        w, v = -w, -v
    sin_half = float(np.linalg.norm(v))
    if sin_half < _SMALL_ANGLE:
        return 2.0 * v  # v = sin(theta/2) * axis ~ (theta/2) * axis
    theta = 2.0 * float(np.arctan2(sin_half, w))
    return v * (theta / sin_half)


def intrinsics_matrix(fx: float, fy: float, cx: float, cy: float) -> np.ndarray:
    """Build a zero-skew intrinsic matrix."""
    if fx <= 0 or fy <= 0:
        raise ValueError("focal lengths must be positive")
    return np.array([[fx, 0.0, cx], [0.0, fy, cy], [0.0, 0.0, 1.0]])


def check_intrinsics(k) -> np.ndarray:
    """Validate the zero-skew intrinsic-matrix invariants and return K as float64."""
    k = np.asarray(k, dtype=np.float64)
    if k.shape != (3, 3):
        raise ValueError(f"intrinsic matrix must be 3x3, got {k.shape}")
    if not np.all(np.isfinite(k)):
        raise ValueError("intrinsic matrix contains non-finite values")
    if k[0, 0] <= 0 or k[1, 1] <= 0:
        raise ValueError("focal lengths must be positive")
    if k[2, 2] != 1.0 or any(k[i, j] != 0.0 for i, j in ((0, 1), (1, 0), (2, 0), (2, 1))):
        raise ValueError("intrinsic matrix must be zero-skew with K[2,2] = 1")
    return k


def projection_matrix(k, r, l) -> np.ndarray:
    """Compose the 3x4 projection P = K @ [R | l] from intrinsics and pose."""
    k = check_intrinsics(k)
    rot = rodrigues_to_matrix(r)
    l = _as_vec3(l)
    return k @ np.hstack([rot, l[:, None]])


def project_points(p: np.ndarray, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Project an (n, 3) array of world points through a 3x4 matrix.

    Returns (pixels (n, 2), depths (n,)). No behind-camera check is done
    here; callers mask on depth themselves. Division by ~0 yields inf/nan
    in the affected rows only.
    """
    pts = np.asarray(points, dtype=np.float64)
    homog = p[:, :3] @ pts.T + p[:, 3:4]
    depth = homog[2]
    with np.errstate(divide="ignore", invalid="ignore"):
        uv = homog[:2] / depth
    return uv.T, depth


def project_point(p: np.ndarray, point) -> tuple[float, float]:
    """Project one world point, raising BehindCamera when depth <= MIN_DEPTH."""
    uv, depth = project_points(p, _as_vec3(point)[None, :])
    if depth[0] <= MIN_DEPTH:
        raise BehindCamera(f"point {point!r} has projective depth {depth[0]:.3g}")
    return float(uv[0, 0]), float(uv[0, 1])


def camera_center(r, l) -> np.ndarray:
    """World-frame camera center C = -R.T @ l."""
    return -rodrigues_to_matrix(r).T @ _as_vec3(l)


@dataclass(frozen=True)
class Ray:
    """A world-frame ray with unit direction."""

    origin: np.ndarray
    direction: np.ndarray

    def point_at(self, t: float) -> np.ndarray:
        return self.origin + t * self.direction


def cast_ray(k, r, l, pixel) -> Ray:
    """Back-project a pixel to the world-frame ray through the camera center."""
    k = check_intrinsics(k)
    rot = rodrigues_to_matrix(r)
    u, v = float(pixel[0]), float(pixel[1])
    d_cam = np.linalg.solve(k, np.array([u, v, 1.0]))
    d_world = rot.T @ d_cam
    d_world /= np.linalg.norm(d_world)
    return Ray(origin=-rot.T @ _as_vec3(l), direction=d_world)


def cast_rays(k, r, l, pixels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized cast_ray: (n, 2) pixels -> (origin (3,), directions (n, 3)).

    Directions are not normalized (only the line matters to callers).
    """
    k = check_intrinsics(k)
    rot = rodrigues_to_matrix(r)
    px = np.asarray(pixels, dtype=np.float64)
    homog = np.column_stack([px, np.ones(len(px))])
    d_cam = np.linalg.solve(k, homog.T)
    return -rot.T @ _as_vec3(l), (rot.T @ d_cam).T
