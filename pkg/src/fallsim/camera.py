"""Pinhole raycast renderer producing depth and semantic-id images."""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from numba import njit

from .world import (
    FURNITURE_IDS,
    SEMANTIC_CEILING,
    SEMANTIC_FLOOR,
    SEMANTIC_WALL,
    RoomVariant,
    object_box,
)

EYE_HEIGHT = 1.2
FOV_DEG = 90.0
MAX_RANGE = 10.0
DEFAULT_RESOLUTION = 128
MAX_RESOLUTION = 300


@lru_cache(maxsize=256)
def camera_rays(size: int, yaw: float, pitch: float) -> np.ndarray:
    """Unit ray directions (size*size, 3), row-major from the top-left pixel."""
    f = 1.0 / math.tan(math.radians(FOV_DEG) / 2)
    c = (np.arange(size) + 0.5) / size * 2 - 1
    u = np.tile(c, size)  # right
    v = -np.repeat(c, size)  # up
    y, p = math.radians(yaw), math.radians(pitch)
    fwd = np.array([math.cos(p) * math.cos(y), math.cos(p) * math.sin(y), math.sin(p)])
    right = np.array([math.sin(y), -math.cos(y), 0.0])
    up = np.array([-math.sin(p) * math.cos(y), -math.sin(p) * math.sin(y), math.cos(p)])
    d = f * fwd[None] + u[:, None] * right[None] + v[:, None] * up[None]
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    d.setflags(write=False)
    return d


@njit(cache=True)
def _trace(o, dirs, lo, hi, ids, dims, max_range, depth, sem):
    n = dirs.shape[0]
    nb = lo.shape[0]
    for k in range(n):
        best = max_range
        bid = 0
        # leave the room interior
        for a in range(3):
            d = dirs[k, a]
            if d > 0:
                t = (dims[a] - o[a]) / d
            elif d < 0:
                t = -o[a] / d
            else:
                continue
            if t < best:
                best = t
                if a < 2:
                    bid = SEMANTIC_WALL
                elif d < 0:
                    bid = SEMANTIC_FLOOR
                else:
                    bid = SEMANTIC_CEILING
        for b in range(nb):
            tn = -1e300
            tf = 1e300
            miss = False
            for a in range(3):
                d = dirs[k, a]
                if d == 0.0:
                    if o[a] < lo[b, a] or o[a] > hi[b, a]:
                        miss = True
                        break
                    continue
                t1 = (lo[b, a] - o[a]) / d
                t2 = (hi[b, a] - o[a]) / d
                if t1 > t2:
                    t1, t2 = t2, t1
                if t1 > tn:
                    tn = t1
                if t2 < tf:
                    tf = t2
                if tn > tf or tn >= best:
                    miss = True
                    break
            if miss or tf <= 0:
                continue
            if tn < 0:
                tn = 0.0
            if tn < best:
                best = tn
                bid = ids[b]
        depth[k] = best
        sem[k] = bid


class SceneGeometry:
    """Solid boxes of a room plus the objects placed in it, with semantic ids."""

    def __init__(self, room: RoomVariant, objects=()):
        lo, hi, ids = [], [], []
        for f in room.furnishings:
            for part in f.parts():
                lo.append(part.lo)
                hi.append(part.hi)
                ids.append(FURNITURE_IDS[f.label])
        for obj, pos in objects:
            box = object_box(obj, pos)
            lo.append(box.lo)
            hi.append(box.hi)
            ids.append(obj.category_index)
        self.lo = np.array(lo, dtype=float).reshape(-1, 3)
        self.hi = np.array(hi, dtype=float).reshape(-1, 3)
        self.ids = np.array(ids, dtype=np.int32)
        self.dims = np.array(room.dims, dtype=float)

    @classmethod
    def of_scene(cls, scene) -> SceneGeometry:
        objects = [(scene.target, scene.rest_pose.position)]
        objects += [(o, p.position) for o, p in scene.distractors]
        return cls(scene.room, objects)

    def render(self, pose, size: int = DEFAULT_RESOLUTION):
        if not 1 <= size <= MAX_RESOLUTION:
            raise ValueError(f"resolution must be in 1..{MAX_RESOLUTION}")
        origin = np.array([pose.position[0], pose.position[1], pose.position[2] + EYE_HEIGHT])
        dirs = camera_rays(size, float(pose.yaw), float(pose.pitch))
        depth = np.empty(size * size)
        sem = np.empty(size * size, dtype=np.int32)
        _trace(origin, dirs, self.lo, self.hi, self.ids, self.dims, MAX_RANGE, depth, sem)
        return depth.reshape(size, size), sem.reshape(size, size)


def render_views(room: RoomVariant, scene, pose, H: int = DEFAULT_RESOLUTION, W: int | None = None):
    """Depth (m along each ray) and semantic ids seen from `pose` at eye height."""
    if W is not None and W != H:
        raise ValueError("only square images are supported")
    geom = SceneGeometry(room) if scene is None else SceneGeometry.of_scene(scene)
    return geom.render(pose, H)

