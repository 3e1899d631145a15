"""Crowned playfield surface and pitch marking geometry.

The field surface is the pointwise minimum of four planes: two "side"
planes rising from the long edges to the center ridge and two "end"
planes rising from the goal lines to the ridge endpoints. All four field
corners sit at height zero and the ridge segment between ``ridge_x1`` and
``ridge_x2`` sits at ``ridge_height``.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from math import acos, ceil, pi

import numpy as np
from scipy.ndimage import gaussian_filter

from .errors import DimensionsOutOfRange, OutOfField
from .raster import GrayImage

# Laws-of-the-game constants (meters).
CENTER_CIRCLE_RADIUS = 9.15
PENALTY_AREA_DEPTH = 16.5
PENALTY_AREA_WIDTH = 40.32
GOAL_AREA_DEPTH = 5.5
GOAL_AREA_WIDTH = 18.32
PENALTY_SPOT_DISTANCE = 11.0
SPOT_RADIUS = 0.11
DEFAULT_LINE_WIDTH = 0.12

MIN_LENGTH, MAX_LENGTH = 90.0, 120.0
MIN_WIDTH, MAX_WIDTH = 45.0, 90.0


@dataclass(frozen=True)
class PlayfieldModel:
    """Field dimensions plus the two ridge points defining the crown.

    Both ridge points lie on the centerline y = width/2 and share the same
    height; that is what makes each side plane (through two corners and
    both ridge points) an actual plane.
    """

    length_m: float = 105.0
    width_m: float = 68.0
    ridge_height_m: float = 0.30
    ridge_x1_m: float = 105.0 / 4
    ridge_x2_m: float = 3 * 105.0 / 4

    def __post_init__(self):
        if self.length_m <= 0 or self.width_m <= 0:
            raise ValueError("field dimensions must be positive")
        if self.ridge_height_m < 0:
            raise ValueError("ridge height must be non-negative")
        if not (0 < self.ridge_x1_m < self.ridge_x2_m < self.length_m):
            raise ValueError("ridge points must satisfy 0 < x1 < x2 < length")

    def plane_coefficients(self) -> np.ndarray:
        """(4, 3) rows (a, b, c) of the plane height functions z = a*x + b*y + c."""
        h, length, width = self.ridge_height_m, self.length_m, self.width_m
        return np.array(
            [
                [0.0, 2.0 * h / width, 0.0],  # near side, rises from y=0
                [0.0, -2.0 * h / width, 2.0 * h],  # far side, rises from y=W
                [h / self.ridge_x1_m, 0.0, 0.0],  # near end, rises from x=0
                [-h / (length - self.ridge_x2_m), 0.0, h * length / (length - self.ridge_x2_m)],
            ]
        )

    def surface_height(self, x, y):
        """Vectorized min-of-planes height; evaluates the extension everywhere."""
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        coeff = self.plane_coefficients()
        z = coeff[0, 0] * x + coeff[0, 1] * y + coeff[0, 2]
        for a, b, c in coeff[1:]:
            z = np.minimum(z, a * x + b * y + c)
        return z

    def height_at(self, x: float, y: float) -> float:
        """Surface height at an in-field point; raises OutOfField outside."""
        if not (0.0 <= x <= self.length_m and 0.0 <= y <= self.width_m):
            raise OutOfField(f"({x}, {y}) outside [0, {self.length_m}] x [0, {self.width_m}]")
        return float(self.surface_height(x, y))

    def center(self) -> np.ndarray:
        """Field center on the surface (ridge height for a standard crown)."""
        cx, cy = self.length_m / 2.0, self.width_m / 2.0
        return np.array([cx, cy, self.height_at(cx, cy)])

    def flattened(self) -> "PlayfieldModel":
        """The same field with the crown removed (ridge height zero)."""
        return PlayfieldModel(
            length_m=self.length_m,
            width_m=self.width_m,
            ridge_height_m=0.0,
            ridge_x1_m=self.ridge_x1_m,
            ridge_x2_m=self.ridge_x2_m,
        )


def height_at(field: PlayfieldModel, x: float, y: float) -> float:
    return field.height_at(x, y)


# ---------------------------------------------------------------------------
# Marking primitives. Each knows its world-frame coverage test: a point is
# painted when it lies within the primitive's stroke (or disk).


@dataclass(frozen=True)
class Segment:
    x1: float
    y1: float
    x2: float
    y2: float
    width: float = DEFAULT_LINE_WIDTH

    def bounds(self):
        m = self.width / 2.0
        return (
            min(self.x1, self.x2) - m,
            min(self.y1, self.y2) - m,
            max(self.x1, self.x2) + m,
            max(self.y1, self.y2) + m,
        )

    def covers(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        dx, dy = self.x2 - self.x1, self.y2 - self.y1
        den = dx * dx + dy * dy
        if den == 0.0:
            dist2 = (x - self.x1) ** 2 + (y - self.y1) ** 2
        else:
            t = np.clip(((x - self.x1) * dx + (y - self.y1) * dy) / den, 0.0, 1.0)
            dist2 = (x - (self.x1 + t * dx)) ** 2 + (y - (self.y1 + t * dy)) ** 2
        return dist2 <= (self.width / 2.0) ** 2


@dataclass(frozen=True)
class Arc:
    """Circular arc swept counterclockwise from ``start_angle`` by ``sweep`` radians."""

    cx: float
    cy: float
    radius: float
    start_angle: float = 0.0
    sweep: float = 2.0 * pi
    width: float = DEFAULT_LINE_WIDTH

    def bounds(self):
        m = self.radius + self.width / 2.0
        return (self.cx - m, self.cy - m, self.cx + m, self.cy + m)

    def covers(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        px, py = x - self.cx, y - self.cy
        dist = np.hypot(px, py)
        half = self.width / 2.0
        if self.sweep >= 2.0 * pi:
            return np.abs(dist - self.radius) <= half
        ang = np.mod(np.arctan2(py, px) - self.start_angle, 2.0 * pi)
        on_arc = (ang <= self.sweep) & (np.abs(dist - self.radius) <= half)
        for end in (self.start_angle, self.start_angle + self.sweep):
            ex = self.cx + self.radius * np.cos(end)
            ey = self.cy + self.radius * np.sin(end)
            on_arc |= (x - ex) ** 2 + (y - ey) ** 2 <= half * half
        return on_arc


@dataclass(frozen=True)
class Rect:
    """Axis-aligned rectangle outline (four stroked edges)."""

    x1: float
    y1: float
    x2: float
    y2: float
    width: float = DEFAULT_LINE_WIDTH

    def bounds(self):
        m = self.width / 2.0
        return (self.x1 - m, self.y1 - m, self.x2 + m, self.y2 + m)

    def _edges(self) -> tuple[Segment, ...]:
        return (
            Segment(self.x1, self.y1, self.x2, self.y1, self.width),
            Segment(self.x2, self.y1, self.x2, self.y2, self.width),
            Segment(self.x2, self.y2, self.x1, self.y2, self.width),
            Segment(self.x1, self.y2, self.x1, self.y1, self.width),
        )

    def covers(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        hit = np.zeros(np.broadcast(x, y).shape, dtype=bool)
        for edge in self._edges():
            hit |= edge.covers(x, y)
        return hit


@dataclass(frozen=True)
class Spot:
    """Filled disk (center mark, penalty mark)."""

    cx: float
    cy: float
    radius: float = SPOT_RADIUS

    def bounds(self):
        return (self.cx - self.radius, self.cy - self.radius, self.cx + self.radius, self.cy + self.radius)

    def covers(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return (x - self.cx) ** 2 + (y - self.cy) ** 2 <= self.radius * self.radius


Primitive = Segment | Arc | Rect | Spot


@dataclass(frozen=True)
class MarkingSet:
    """World-frame marking primitives inside an L x W field rectangle."""

    length_m: float
    width_m: float
    primitives: tuple[Primitive, ...] = dc_field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "primitives", tuple(self.primitives))
        pad = 0.5  # strokes may overhang the rectangle by their half width
        for prim in self.primitives:
            x0, y0, x1, y1 = prim.bounds()
            if x0 < -pad or y0 < -pad or x1 > self.length_m + pad or y1 > self.width_m + pad:
                raise ValueError(f"primitive {prim} lies outside the field rectangle")

    def coverage(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Boolean paint test for arbitrary world points (vectorized)."""
        shape = np.broadcast(np.asarray(x), np.asarray(y)).shape
        xf = np.broadcast_to(np.asarray(x, dtype=np.float64), shape).ravel()
        yf = np.broadcast_to(np.asarray(y, dtype=np.float64), shape).ravel()
        hit = np.zeros(xf.shape, dtype=bool)
        for prim in self.primitives:
            x0, y0, x1, y1 = prim.bounds()
            cand = (xf >= x0) & (xf <= x1) & (yf >= y0) & (yf <= y1)
            cand &= ~hit
            idx = np.flatnonzero(cand)
            if idx.size == 0:
                continue
            inside = prim.covers(xf[idx], yf[idx])
            hit[idx[inside]] = True
        return hit.reshape(shape)


def standard_markings(length_m: float = 105.0, width_m: float = 68.0,
                      line_width: float = DEFAULT_LINE_WIDTH) -> MarkingSet:
    """Regulation football pitch markings (20 primitives).

    Boundary rectangle, halfway line, center circle and mark, both penalty
    areas and goal areas (three stroked sides each; the goal line is the
    fourth), penalty marks, and penalty arcs.
    """
    if not (MIN_LENGTH <= length_m <= MAX_LENGTH and MIN_WIDTH <= width_m <= MAX_WIDTH):
        raise DimensionsOutOfRange(
            f"{length_m} x {width_m} outside the legal range "
            f"[{MIN_LENGTH}, {MAX_LENGTH}] x [{MIN_WIDTH}, {MAX_WIDTH}]"
        )
    half_w = width_m / 2.0
    mid = length_m / 2.0
    prims: list[Primitive] = [
        Rect(0.0, 0.0, length_m, width_m, line_width),
        Segment(mid, 0.0, mid, width_m, line_width),
        Arc(mid, half_w, CENTER_CIRCLE_RADIUS, width=line_width),
        Spot(mid, half_w),
    ]

    def box(depth: float, box_width: float):
        """Three stroked sides of a goal-anchored box, for both field ends."""
        y1, y2 = half_w - box_width / 2.0, half_w + box_width / 2.0
        for x_goal, x_front in ((0.0, depth), (length_m, length_m - depth)):
            prims.append(Segment(x_front, y1, x_front, y2, line_width))
            prims.append(Segment(x_goal, y1, x_front, y1, line_width))
            prims.append(Segment(x_goal, y2, x_front, y2, line_width))

    box(PENALTY_AREA_DEPTH, PENALTY_AREA_WIDTH)
    box(GOAL_AREA_DEPTH, GOAL_AREA_WIDTH)

    prims.append(Spot(PENALTY_SPOT_DISTANCE, half_w))
    prims.append(Spot(length_m - PENALTY_SPOT_DISTANCE, half_w))

    # Penalty arcs: the part of the 9.15 m circle around each penalty mark
    # that lies outside its penalty area.
    alpha = acos((PENALTY_AREA_DEPTH - PENALTY_SPOT_DISTANCE) / CENTER_CIRCLE_RADIUS)
    prims.append(
        Arc(PENALTY_SPOT_DISTANCE, half_w, CENTER_CIRCLE_RADIUS,
            start_angle=-alpha, sweep=2.0 * alpha, width=line_width)
    )
    prims.append(
        Arc(length_m - PENALTY_SPOT_DISTANCE, half_w, CENTER_CIRCLE_RADIUS,
            start_angle=pi - alpha, sweep=2.0 * alpha, width=line_width)
    )
    return MarkingSet(length_m=length_m, width_m=width_m, primitives=tuple(prims))


SUPERSAMPLE = 2


def render_template(markings: MarkingSet, resolution: float) -> GrayImage:
    """Rasterize markings into a binary bird's-eye image at ``resolution`` m/px.

    Rendered at 2x supersampling and box-downsampled; a pixel is lit when
    at least half its subsamples fall on a primitive.
    """
    if resolution <= 0:
        raise ValueError("resolution must be positive")
    w = ceil(markings.length_m / resolution)
    h = ceil(markings.width_m / resolution)
    sub = resolution / SUPERSAMPLE
    xs = (np.arange(w * SUPERSAMPLE) + 0.5) * sub
    ys = (np.arange(h * SUPERSAMPLE) + 0.5) * sub
    gx, gy = np.meshgrid(xs, ys)
    cover = markings.coverage(gx, gy).astype(np.float64)
    avg = cover.reshape(h, SUPERSAMPLE, w, SUPERSAMPLE).mean(axis=(1, 3))
    return GrayImage((avg >= 0.5).astype(np.float64))


@dataclass(frozen=True)
class BlurSpec:
    """Gaussian radii (in bird's-eye pixels) combined by pixel-wise maximum."""

    radii: tuple[float, ...] = (2.0, 4.0, 8.0, 16.0)

    def __post_init__(self):
        object.__setattr__(self, "radii", tuple(float(r) for r in self.radii))
        if any(r <= 0 for r in self.radii):
            raise ValueError("blur radii must be strictly positive")
        if len(set(self.radii)) != len(self.radii):
            raise ValueError("blur radii must be distinct")

    def scaled(self, factor: float) -> "BlurSpec":
        """Radii rescaled to a different raster resolution."""
        if not self.radii:
            return self
        return BlurSpec(tuple(r * factor for r in self.radii))


def blurred_template(template: GrayImage, spec: BlurSpec) -> GrayImage:
    """Combine the template with renormalized Gaussian blurs of itself.

    Each radius produces one blurred layer rescaled so its maximum is 1;
    the output is the pixel-wise maximum of all layers and the original,
    giving the loss a wide attraction basin while keeping the exact lines.
    """
    out = template.values.copy()
    for radius in spec.radii:
        layer = gaussian_filter(template.values, sigma=radius, mode="constant")
        peak = layer.max()
        if peak > 0.0:
            layer = layer / peak
        np.maximum(out, layer, out=out)
    return GrayImage(np.clip(out, 0.0, 1.0))
