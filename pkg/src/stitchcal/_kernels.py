"""Numba-compiled hot paths for warping and loss counting.

The kernels reproduce the exact arithmetic of the modular operations
(projection, bilinear sampling, strict >0.5 counting); the loss kernel
additionally skips bilinear gathers in regions a precomputed summary
grid proves to be all-zero, which changes nothing because a bilinear
blend of four zeros is exactly zero.
"""

from __future__ import annotations

import numpy as np
from numba import njit

MIN_DEPTH = 1e-9  # keep in sync with geometry.MIN_DEPTH

SUMMARY_BLOCK = 16


def mask_summary(values: np.ndarray) -> np.ndarray:
    """Conservative per-block nonzero indicator, dilated by one block.

    summary[J, I] == 0 guarantees every mask pixel any bilinear stencil
    rooted in block (J, I) can touch is zero.
    """
    h, w = values.shape
    bh = -(-h // SUMMARY_BLOCK)
    bw = -(-w // SUMMARY_BLOCK)
    padded = np.zeros((bh * SUMMARY_BLOCK, bw * SUMMARY_BLOCK), dtype=bool)
    padded[:h, :w] = values != 0.0
    blocks = padded.reshape(bh, SUMMARY_BLOCK, bw, SUMMARY_BLOCK).any(axis=(1, 3))
    rows = blocks.copy()  # full 3x3 dilation: the stencil may cross into any neighboring block
    rows[:-1] |= blocks[1:]
    rows[1:] |= blocks[:-1]
    out = rows.copy()
    out[:, :-1] |= rows[:, 1:]
    out[:, 1:] |= rows[:, :-1]
    return out.astype(np.uint8)


@njit(cache=True)
def warp_values(mask, p, pts, out_vals, out_vis):
    """Fill per-pixel warped values and visibility for one camera."""
    mh, mw = mask.shape
    n = pts.shape[0]
    for i in range(n):
        x = pts[i, 0]
        y = pts[i, 1]
        z = pts[i, 2]
        d = p[2, 0] * x + p[2, 1] * y + p[2, 2] * z + p[2, 3]
        val = 0.0
        vis = False
        if d > MIN_DEPTH:
            u = (p[0, 0] * x + p[0, 1] * y + p[0, 2] * z + p[0, 3]) / d
            v = (p[1, 0] * x + p[1, 1] * y + p[1, 2] * z + p[1, 3]) / d
            if 0.0 <= u <= mw - 1.0 and 0.0 <= v <= mh - 1.0:
                vis = True
                i0 = int(u) if mw > 1 else 0
                if i0 > mw - 2:
                    i0 = mw - 2 if mw > 1 else 0
                j0 = int(v) if mh > 1 else 0
                if j0 > mh - 2:
                    j0 = mh - 2 if mh > 1 else 0
                i1 = i0 + 1 if i0 + 1 < mw else mw - 1
                j1 = j0 + 1 if j0 + 1 < mh else mh - 1
                fu = u - i0
                fv = v - j0
                top = mask[j0, i0] * (1.0 - fu) + mask[j0, i1] * fu
                bot = mask[j1, i0] * (1.0 - fu) + mask[j1, i1] * fu
                val = top * (1.0 - fv) + bot * fv
        out_vals[i] = val
        out_vis[i] = 1 if vis else 0


@njit(cache=True)
def warp_count(mask, summary, p, pts, tmpl_lit, out_lit, out_vis):
    """Warp one camera and accumulate the single-loss counts in the same pass.

    Returns (intersection, union) of {warp > 0.5} and {template > 0.5}
    restricted to the camera's visibility region, while filling the lit
    and visibility bitmaps used afterwards by the stitch counts.
    """
    mh, mw = mask.shape
    n = pts.shape[0]
    inter = 0
    union = 0
    for i in range(n):
        x = pts[i, 0]
        y = pts[i, 1]
        z = pts[i, 2]
        d = p[2, 0] * x + p[2, 1] * y + p[2, 2] * z + p[2, 3]
        lit = False
        vis = False
        if d > MIN_DEPTH:
            u = (p[0, 0] * x + p[0, 1] * y + p[0, 2] * z + p[0, 3]) / d
            v = (p[1, 0] * x + p[1, 1] * y + p[1, 2] * z + p[1, 3]) / d
            if 0.0 <= u <= mw - 1.0 and 0.0 <= v <= mh - 1.0:
                vis = True
                if summary[int(v) // SUMMARY_BLOCK, int(u) // SUMMARY_BLOCK] != 0:
                    i0 = int(u) if mw > 1 else 0
                    if i0 > mw - 2:
                        i0 = mw - 2 if mw > 1 else 0
                    j0 = int(v) if mh > 1 else 0
                    if j0 > mh - 2:
                        j0 = mh - 2 if mh > 1 else 0
                    i1 = i0 + 1 if i0 + 1 < mw else mw - 1
                    j1 = j0 + 1 if j0 + 1 < mh else mh - 1
                    fu = u - i0
                    fv = v - j0
                    top = mask[j0, i0] * (1.0 - fu) + mask[j0, i1] * fu
                    bot = mask[j1, i0] * (1.0 - fu) + mask[j1, i1] * fu
                    lit = top * (1.0 - fv) + bot * fv > 0.5
        out_lit[i] = 1 if lit else 0
        out_vis[i] = 1 if vis else 0
        if vis:
            t = tmpl_lit[i] != 0
            if lit and t:
                inter += 1
            if lit or t:
                union += 1
    return inter, union


@njit(cache=True)
def stitch_count(lit, vis):
    """(intersection, union) of all cameras' lit bitmaps inside the shared view."""
    n_cams, n = lit.shape
    inter = 0
    union = 0
    for i in range(n):
        shared = True
        all_lit = True
        any_lit = False
        for c in range(n_cams):
            if vis[c, i] == 0:
                shared = False
                break
            if lit[c, i] != 0:
                any_lit = True
            else:
                all_lit = False
        if shared:
            if all_lit:
                inter += 1
            if any_lit:
                union += 1
    return inter, union
