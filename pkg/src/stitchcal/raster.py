"""Grayscale rasters, bilinear sampling, bird's-eye warping, and IoU counting.

A ``GrayImage`` stores values in [0, 1] row-major; pixel (0, 0) is the
center of the top-left pixel and continuous coordinates interpolate
bilinearly between pixel centers. Visibility masks are plain boolean
arrays with the same (height, width) layout.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from math import ceil
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np
from PIL import Image

from .errors import DimensionMismatch, OutOfImage

if TYPE_CHECKING:
    from .field import PlayfieldModel


@dataclass(frozen=True)
class GrayImage:
    """Single-channel raster with float64 values in [0, 1]."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2:
            raise ValueError(f"expected a 2-D array, got shape {v.shape}")
        if v.size and (v.min() < 0.0 or v.max() > 1.0):
            raise ValueError("image values must lie in [0, 1]")
        object.__setattr__(self, "values", v)

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @classmethod
    def zeros(cls, width: int, height: int) -> "GrayImage":
        return cls(np.zeros((height, width)))


@dataclass(frozen=True)
class BirdsEyeFrame:
    """Top-down raster frame over the field rectangle, anchored at corner (0, 0).

    Pixel (i, j) covers the world square [i*res, (i+1)*res] x [j*res,
    (j+1)*res]; its center sits at ((i + 0.5) * res, (j + 0.5) * res).
    """

    resolution: float  # meters per pixel
    length_m: float
    width_m: float

    def __post_init__(self):
        if self.resolution <= 0:
            raise ValueError("resolution must be positive")

    @property
    def width(self) -> int:
        return ceil(self.length_m / self.resolution)

    @property
    def height(self) -> int:
        return ceil(self.width_m / self.resolution)

    @classmethod
    def for_field(cls, field: "PlayfieldModel", resolution: float) -> "BirdsEyeFrame":
        return cls(resolution=resolution, length_m=field.length_m, width_m=field.width_m)

    def pixel_centers(self) -> tuple[np.ndarray, np.ndarray]:
        """World x coordinates of columns and y coordinates of rows."""
        xs = (np.arange(self.width) + 0.5) * self.resolution
        ys = (np.arange(self.height) + 0.5) * self.resolution
        return xs, ys

    def world_to_pixels(self, xy: np.ndarray) -> np.ndarray:
        """Continuous pixel coordinates of world (x, y) points."""
        return np.asarray(xy, dtype=np.float64) / self.resolution - 0.5


def bilinear_batch(values: np.ndarray, u: np.ndarray, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Sample many continuous coordinates at once.

    Returns (samples, inside) where ``inside`` flags coordinates within
    [0, w-1] x [0, h-1]; samples are 0 outside.
    """
    h, w = values.shape
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    with np.errstate(invalid="ignore"):
        inside = (u >= 0.0) & (u <= w - 1.0) & (v >= 0.0) & (v <= h - 1.0)
    uc = np.where(inside, u, 0.0)
    vc = np.where(inside, v, 0.0)
    i0 = np.minimum(uc.astype(np.intp), w - 2) if w > 1 else np.zeros_like(uc, dtype=np.intp)
    j0 = np.minimum(vc.astype(np.intp), h - 2) if h > 1 else np.zeros_like(vc, dtype=np.intp)
    fu = uc - i0
    fv = vc - j0
    i1 = np.minimum(i0 + 1, w - 1)
    j1 = np.minimum(j0 + 1, h - 1)
    top = values[j0, i0] * (1.0 - fu) + values[j0, i1] * fu
    bot = values[j1, i0] * (1.0 - fu) + values[j1, i1] * fu
    out = top * (1.0 - fv) + bot * fv
    return np.where(inside, out, 0.0), inside


def sample_bilinear(img: GrayImage, u: float, v: float) -> float:
    """Bilinear interpolation of the four neighbors of (u, v)."""
    samples, inside = bilinear_batch(img.values, np.array([u]), np.array([v]))
    if not inside[0]:
        raise OutOfImage(f"({u}, {v}) outside [0, {img.width - 1}] x [0, {img.height - 1}]")
    return float(samples[0])


@lru_cache(maxsize=16)
def _frame_world_points(field: "PlayfieldModel", frame: BirdsEyeFrame) -> np.ndarray:
    """(n, 3) world points at the frame's pixel centers, on the field surface.

    Cached per (field, frame); treat the returned array as read-only.
    """
    xs, ys = frame.pixel_centers()
    gx, gy = np.meshgrid(xs, ys)
    gz = field.surface_height(gx, gy)
    pts = np.stack([gx.ravel(), gy.ravel(), gz.ravel()], axis=1)
    pts.setflags(write=False)
    return pts


def warp_to_birdseye(
    mask: GrayImage,
    k: np.ndarray,
    r: np.ndarray,
    l: np.ndarray,
    field: "PlayfieldModel",
    frame: BirdsEyeFrame,
) -> tuple[GrayImage, np.ndarray]:
    """Inverse-warp a camera-frame mask onto the bird's-eye frame.

    Every bird's-eye pixel center is lifted to the field surface, projected
    through K [R | l], and bilinearly sampled from ``mask``. Returns the
    warped image plus the boolean visibility mask (projected in front of
    the camera and inside the mask image). Invisible pixels are 0.
    """
    from ._kernels import warp_values
    from .geometry import projection_matrix

    p = projection_matrix(k, r, l)
    pts = _frame_world_points(field, frame)
    vals = np.empty(pts.shape[0])
    vis8 = np.empty(pts.shape[0], dtype=np.uint8)
    warp_values(np.ascontiguousarray(mask.values), p, pts, vals, vis8)
    vis = vis8.astype(bool).reshape(frame.height, frame.width)
    return GrayImage(vals.reshape(frame.height, frame.width)), vis


def _check_region(img: GrayImage, region: np.ndarray | None) -> np.ndarray | None:
    if region is None:
        return None
    region = np.asarray(region)
    if region.shape != img.values.shape:
        raise DimensionMismatch(
            f"region shape {region.shape} does not match image shape {img.values.shape}"
        )
    return region.astype(bool)


def count_above(img: GrayImage, region: np.ndarray | None = None, threshold: float = 0.5) -> int:
    """Number of pixels strictly greater than ``threshold`` inside ``region``."""
    region = _check_region(img, region)
    above = img.values > threshold
    if region is not None:
        above &= region
    return int(above.sum())


def iou(a: GrayImage, b: GrayImage, region: np.ndarray | None = None) -> float:
    """Thresholded intersection-over-union of two rasters.

    Both images are binarized at a strict 0.5 threshold. An empty union
    counts as a perfect match (returns 1.0).
    """
    if a.values.shape != b.values.shape:
        raise DimensionMismatch(f"image shapes differ: {a.values.shape} vs {b.values.shape}")
    region = _check_region(a, region)
    fa = a.values > 0.5
    fb = b.values > 0.5
    if region is not None:
        fa = fa & region
        fb = fb & region
    union = int((fa | fb).sum())
    if union == 0:
        return 1.0
    return int((fa & fb).sum()) / union


# ---------------------------------------------------------------------------
# File I/O: 8-bit grayscale PGM (P5) and PNG, mapped linearly [0,255] <-> [0,1]


def to_uint8(img: GrayImage) -> np.ndarray:
    return np.rint(img.values * 255.0).astype(np.uint8)


def from_uint8(data: np.ndarray) -> GrayImage:
    return GrayImage(np.asarray(data, dtype=np.float64) / 255.0)


def write_pgm(img: GrayImage, path) -> None:
    data = to_uint8(img)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{img.width} {img.height}\n255\n".encode("ascii"))
        fh.write(data.tobytes())


def read_pgm(path) -> GrayImage:
    raw = Path(path).read_bytes()
    # Header: magic, width, height, maxval; '#' comments allowed between tokens.
    tokens = []
    pos = 0
    while len(tokens) < 4:
        m = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)").match(raw, pos)
        if m is None:
            raise ValueError(f"{path}: truncated PGM header")
        tokens.append(m.group(1))
        pos = m.end()
    if tokens[0] != b"P5":
        raise ValueError(f"{path}: not a binary PGM (P5) file")
    width, height, maxval = (int(t) for t in tokens[1:])
    if maxval != 255:
        raise ValueError(f"{path}: only maxval 255 is supported, got {maxval}")
    pos += 1  # single whitespace byte after maxval
    data = np.frombuffer(raw, dtype=np.uint8, count=width * height, offset=pos)
    return from_uint8(data.reshape(height, width))


def write_png(img: GrayImage, path) -> None:
    Image.fromarray(to_uint8(img), mode="L").save(path, format="PNG")


def read_png(path) -> GrayImage:
    with Image.open(path) as im:
        return from_uint8(np.asarray(im.convert("L")))


def load_image(path) -> GrayImage:
    """Read a mask from PGM or PNG, dispatching on the file suffix."""
    suffix = Path(path).suffix.lower()
    if suffix == ".pgm":
        return read_pgm(path)
    if suffix == ".png":
        return read_png(path)
    raise ValueError(f"unsupported image format: {path}")


def save_image(img: GrayImage, path) -> None:
    suffix = Path(path).suffix.lower()
    if suffix == ".pgm":
        write_pgm(img, path)
    elif suffix == ".png":
        write_png(img, path)
    else:
        raise ValueError(f"unsupported image format: {path}")
