"""Footprint geometry: oriented rectangles and discs."""

from __future__ import annotations

import numpy as np


def corners(fp, xy, heading):
    """Footprint outline points for every tick, shape (n, 4, 2).

    Rectangles give their four corners; discs give the four points at
    the ends of the heading and normal axes.
    """
    xy = np.atleast_2d(xy)
    h = np.atleast_1d(heading)
    c, s = np.cos(h), np.sin(h)
    fwd = np.stack([c, s], axis=-1)
    left = np.stack([-s, c], axis=-1)
    if fp.shape == "rect":
        hl, hw = fp.length / 2, fp.width / 2
        offs = [(hl, hw), (hl, -hw), (-hl, -hw), (-hl, hw)]
    else:
        r = fp.radius
        offs = [(r, 0), (0, -r), (-r, 0), (0, r)]
    return np.stack([xy + a * fwd + b * left for a, b in offs], axis=1)


def _rect_axes(h):
    c, s = np.cos(h), np.sin(h)
    return np.array([[c, s], [-s, c]])


def _sat(pa, pb, axes):
    for ax in axes:
        a = pa @ ax
        b = pb @ ax
        if a.max() < b.min() or b.max() < a.min():
            return False
    return True


def _rect_disc(center, heading, fp, p, r):
    c, s = np.cos(heading), np.sin(heading)
    d = np.asarray(p) - center
    lx = d[0] * c + d[1] * s
    ly = -d[0] * s + d[1] * c
    qx = np.clip(lx, -fp.length / 2, fp.length / 2)
    qy = np.clip(ly, -fp.width / 2, fp.width / 2)
    return (lx - qx) ** 2 + (ly - qy) ** 2 <= r * r


def overlap(fa, pa, ha, fb, pb, hb) -> bool:
    """Exact overlap of two footprints at one instant (touching counts)."""
    pa, pb = np.asarray(pa, float), np.asarray(pb, float)
    if fa.shape == "disc" and fb.shape == "disc":
        return float(np.hypot(*(pa - pb))) <= fa.radius + fb.radius
    if fa.shape == "rect" and fb.shape == "rect":
        ca = corners(fa, pa, ha)[0]
        cb = corners(fb, pb, hb)[0]
        return _sat(ca, cb, np.vstack([_rect_axes(ha), _rect_axes(hb)]))
    if fa.shape == "disc":
        fa, pa, ha, fb, pb, hb = fb, pb, hb, fa, pa, ha
    return bool(_rect_disc(pa, ha, fa, pb, fb.radius))
