"""Vectorized ray / axis-aligned box intersection (slab method)."""
from __future__ import annotations

import numpy as np

INF = np.inf


def boxes_to_arrays(boxes) -> tuple[np.ndarray, np.ndarray]:
    if not boxes:
        return np.zeros((0, 3)), np.zeros((0, 3))
    lo = np.array([b.lo for b in boxes], dtype=float)
    hi = np.array([b.hi for b in boxes], dtype=float)
    return lo, hi


def ray_box_entry(origins, dirs, lo, hi):
    """Entry distance of each ray into each box.

    origins, dirs: (N, 3); lo, hi: (B, 3). Returns (N, B) array of entry
    parameters ``t`` (in units of ``dirs``); ``inf`` where the ray misses.
    Rays starting inside a box report ``t = 0``.
    """
    o = origins[:, None, :]
    d = dirs[:, None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / d
        t1 = (lo[None] - o) * inv
        t2 = (hi[None] - o) * inv
    tmin = np.minimum(t1, t2)
    tmax = np.maximum(t1, t2)
    # zero direction component: inside the slab means unbounded, outside means miss
    flat = d == 0
    inside = (o >= lo[None]) & (o <= hi[None])
    tmin = np.where(flat, np.where(inside, -INF, INF), tmin)
    tmax = np.where(flat, np.where(inside, INF, -INF), tmax)
    tn = tmin.max(axis=2)
    tf = tmax.min(axis=2)
    hit = (tf >= tn) & (tf > 0)
    return np.where(hit, np.maximum(tn, 0.0), INF)


def segment_blocked(starts, ends, lo, hi, eps: float = 1e-6) -> np.ndarray:
    """True for each segment that passes through any box strictly before its end."""
    if len(lo) == 0:
        return np.zeros(len(starts), dtype=bool)
    t = ray_box_entry(starts, ends - starts, lo, hi)
    return (t < 1.0 - eps).any(axis=1)
