"""Agent-side maps (occupancy, semantic goals), frontiers, A* planning, path following."""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit
from scipy import ndimage

from .camera import EYE_HEIGHT, MAX_RANGE, camera_rays
from .env import AgentAction
from .world import AGENT_HEIGHT, CELL, cell_center, cell_of

OBSTACLE_MIN_Z = 0.1
CLEAR_AFTER = 5
CARVE_STRIDE = 2
CARVE_STEP = 0.05
HEADING_TOL = 15.0
LOOKAHEAD = 8
ARRIVE_RADIUS = 0.2
UNKNOWN_COST = 1.5
SUBSTITUTE_RADIUS = 2.0

_EIGHT = np.ones((3, 3), dtype=bool)


class MapError(ValueError):
    pass


class NoPathError(RuntimeError):
    pass


@dataclass(eq=False)
class OccupancyMap:
    occupied: np.ndarray
    explored: np.ndarray
    clear_votes: np.ndarray
    origin: tuple[float, float] = (0.0, 0.0)

    @classmethod
    def empty(cls, shape, origin=(0.0, 0.0)) -> OccupancyMap:
        return cls(np.zeros(shape, bool), np.zeros(shape, bool), np.zeros(shape, np.int16), origin)

    @classmethod
    def for_room(cls, dims) -> OccupancyMap:
        """Square grid covering a W x D room."""
        n = int(math.ceil(max(dims[0], dims[1]) / CELL - 1e-9))
        return cls.empty((n, n))

    @property
    def shape(self):
        return self.occupied.shape

    @property
    def free(self) -> np.ndarray:
        return self.explored & ~self.occupied

    def copy(self) -> OccupancyMap:
        return OccupancyMap(self.occupied.copy(), self.explored.copy(), self.clear_votes.copy(), self.origin)

    def inside(self, cell) -> bool:
        return 0 <= cell[0] < self.shape[0] and 0 <= cell[1] < self.shape[1]


@dataclass(eq=False)
class SemanticGoalMap:
    marked: np.ndarray
    category: np.ndarray  # candidate category index per cell, 0 where unmarked

    @classmethod
    def empty(cls, shape) -> SemanticGoalMap:
        return cls(np.zeros(shape, bool), np.zeros(shape, np.int16))

    def copy(self) -> SemanticGoalMap:
        return SemanticGoalMap(self.marked.copy(), self.category.copy())

    def candidates(self):
        ii, jj = np.nonzero(self.marked)
        return [((int(i), int(j)), int(self.category[i, j])) for i, j in zip(ii, jj)]


@dataclass(eq=False)
class LocalMaps:
    """Single-frame observations in the global frame."""
    occupied: np.ndarray
    floor: np.ndarray
    seen: np.ndarray
    semantic: dict = field(default_factory=dict)  # cell -> category index
    origin: tuple[float, float] = (0.0, 0.0)

    @classmethod
    def empty(cls, shape, origin=(0.0, 0.0)) -> LocalMaps:
        return cls(np.zeros(shape, bool), np.zeros(shape, bool), np.zeros(shape, bool), {}, origin)


@njit(cache=True)
def _project(depth, dirs, ex, ey, ez, nx, ny, cell, max_range, zmin, zmax, stride, step, occ, floor, seen):
    h, w = depth.shape
    for r in range(h):
        for c in range(w):
            k = r * w + c
            d = depth[r, c]
            dx, dy, dz = dirs[k, 0], dirs[k, 1], dirs[k, 2]
            hit = d < max_range - 1e-9
            if hit:
                px, py, pz = ex + dx * d, ey + dy * d, ez + dz * d
                ix, iy = int(math.floor(px / cell)), int(math.floor(py / cell))
                if 0 <= ix < nx and 0 <= iy < ny:
                    seen[ix, iy] = True
                    if zmin < pz < zmax:
                        occ[ix, iy] = True
                    elif pz <= zmin:
                        floor[ix, iy] = True
            if r % stride == 0 and c % stride == 0:
                horiz = math.sqrt(dx * dx + dy * dy) * d
                n = int(horiz / step)
                hx, hy = dx / max(math.sqrt(dx * dx + dy * dy), 1e-12), dy / max(math.sqrt(dx * dx + dy * dy), 1e-12)
                for s in range(n):
                    t = s * step
                    ix, iy = int(math.floor((ex + hx * t) / cell)), int(math.floor((ey + hy * t) / cell))
                    if 0 <= ix < nx and 0 <= iy < ny:
                        seen[ix, iy] = True


def mask_center(mask: np.ndarray, depth: np.ndarray, pose):
    """World point behind the geometric center of a mask, at the mask's median depth."""
    rows, cols = np.nonzero(mask)
    h, w = mask.shape
    r, c = rows.mean(), cols.mean()
    d = float(np.median(depth[rows, cols]))
    f = 1.0
    u = ((c + 0.5) / w) * 2 - 1
    v = -(((r + 0.5) / h) * 2 - 1)
    y, p = math.radians(pose.yaw), math.radians(pose.pitch)
    fwd = np.array([math.cos(p) * math.cos(y), math.cos(p) * math.sin(y), math.sin(p)])
    right = np.array([math.sin(y), -math.cos(y), 0.0])
    up = np.array([-math.sin(p) * math.cos(y), -math.sin(p) * math.sin(y), math.cos(p)])
    ray = f * fwd + u * right + v * up
    ray /= np.linalg.norm(ray)
    eye = np.array([pose.position[0], pose.position[1], pose.position[2] + EYE_HEIGHT])
    return eye + ray * d


def project_local_maps(depth: np.ndarray, seg_masks: dict, pose, shape, origin=(0.0, 0.0)) -> LocalMaps:
    """Back-project a depth image into occupied / floor / seen cells plus semantic centers."""
    depth = np.asarray(depth, dtype=float)
    h, w = depth.shape
    if h != w:
        raise MapError("depth must be square")
    for m in seg_masks.values():
        if m.shape != depth.shape:
            raise MapError("mask and depth resolutions differ")
    local = LocalMaps.empty(shape, origin)
    dirs = camera_rays(h, float(pose.yaw), float(pose.pitch))
    ex, ey = pose.position[0] - origin[0], pose.position[1] - origin[1]
    _project(depth, dirs, ex, ey, pose.position[2] + EYE_HEIGHT, shape[0], shape[1], CELL, MAX_RANGE,
             OBSTACLE_MIN_Z, AGENT_HEIGHT, CARVE_STRIDE, CARVE_STEP, local.occupied, local.floor, local.seen)
    for cat, mask in seg_masks.items():
        if not mask.any():
            continue
        p = mask_center(mask, depth, pose)
        cell = cell_of(p[0] - origin[0], p[1] - origin[1])
        if 0 <= cell[0] < shape[0] and 0 <= cell[1] < shape[1]:
            local.semantic[cell] = int(cat)
            local.seen[cell] = True
    return local


def fuse(occ: OccupancyMap, sem: SemanticGoalMap, local: LocalMaps):
    """Monotone merge of one frame; occupied cells clear after 5 floor sightings."""
    if local.occupied.shape != occ.shape or tuple(local.origin) != tuple(occ.origin):
        raise MapError("frame mismatch between local and global maps")
    occ2, sem2 = occ.copy(), sem.copy()
    occ2.explored |= local.occupied | local.floor | local.seen
    contradict = occ2.occupied & local.floor & ~local.occupied
    occ2.clear_votes[contradict] += 1
    cleared = occ2.clear_votes >= CLEAR_AFTER
    occ2.occupied |= local.occupied
    occ2.occupied[cleared & ~local.occupied] = False
    occ2.clear_votes[cleared] = 0
    for cell, cat in local.semantic.items():
        sem2.marked[cell] = True
        sem2.category[cell] = cat
        occ2.explored[cell] = True
    return occ2, sem2


# -- frontiers -----------------------------------------------------------------------

@dataclass(frozen=True)
class Frontier:
    cells: tuple[tuple[int, int], ...]
    distance: float  # from the reference cell to the nearest frontier cell (cells)

    @property
    def size(self) -> int:
        return len(self.cells)

    @property
    def centroid(self):
        a = np.array(self.cells, dtype=float)
        return tuple(a.mean(axis=0))


def frontier_mask(occ: OccupancyMap) -> np.ndarray:
    free = occ.free
    unknown = ~occ.explored
    adj = np.zeros_like(free)
    adj[1:, :] |= unknown[:-1, :]
    adj[:-1, :] |= unknown[1:, :]
    adj[:, 1:] |= unknown[:, :-1]
    adj[:, :-1] |= unknown[:, 1:]
    return free & adj


def frontiers(occ: OccupancyMap, from_cell=None) -> list[Frontier]:
    """8-connected clusters of explored-free cells touching unexplored ones, largest first."""
    labels, n = ndimage.label(frontier_mask(occ), structure=_EIGHT)
    out = []
    for k in range(1, n + 1):
        ii, jj = np.nonzero(labels == k)
        cells = tuple(zip(ii.tolist(), jj.tolist()))
        if from_cell is None:
            dist = 0.0
        else:
            dist = float(np.min(np.hypot(ii - from_cell[0], jj - from_cell[1])))
        out.append(Frontier(cells, dist))
    out.sort(key=lambda f: (-f.size, f.distance, f.cells[0]))
    return out


# -- A* --------------------------------------------------------------------------------

def inflate(blocked: np.ndarray, cells: int = 1) -> np.ndarray:
    if cells <= 0:
        return blocked.copy()
    return ndimage.binary_dilation(blocked, structure=_EIGHT, iterations=cells)


@njit(cache=True)
def _astar(passable, weight, sx, sy, gx, gy):
    nx, ny = passable.shape
    inf = np.inf
    g = np.full((nx, ny), inf)
    parent = np.full((nx, ny), -1, dtype=np.int64)
    closed = np.zeros((nx, ny), dtype=np.bool_)
    g[sx, sy] = 0.0
    r2 = math.sqrt(2.0)
    heap = [(0.0, 0.0, sx * ny + sy)]
    while heap:
        f, gc, idx = heapq.heappop(heap)
        x, y = idx // ny, idx % ny
        if closed[x, y]:
            continue
        closed[x, y] = True
        if x == gx and y == gy:
            break
        for dx in range(-1, 2):
            for dy in range(-1, 2):
                if dx == 0 and dy == 0:
                    continue
                u, v = x + dx, y + dy
                if u < 0 or v < 0 or u >= nx or v >= ny or not passable[u, v] or closed[u, v]:
                    continue
                if dx != 0 and dy != 0:
                    if not (passable[x + dx, y] and passable[x, y + dy]):
                        continue
                    length = r2
                else:
                    length = 1.0
                ng = gc + length * 0.5 * (weight[x, y] + weight[u, v])
                if ng < g[u, v]:
                    g[u, v] = ng
                    parent[u, v] = idx
                    ax, ay = abs(u - gx), abs(v - gy)
                    h = (max(ax, ay) - min(ax, ay)) + r2 * min(ax, ay)
                    heapq.heappush(heap, (ng + h, ng, u * ny + v))
    return g[gx, gy], parent


def astar_grid(passable: np.ndarray, weight: np.ndarray, start, goal):
    """Shortest 8-connected path (no corner cutting) with edge cost length * mean cell weight.

    Returns (cost in cells, path); raises NoPathError when unreachable.
    """
    passable = np.ascontiguousarray(passable, dtype=np.bool_)
    weight = np.ascontiguousarray(weight, dtype=float)
    if weight.min() < 1.0:
        raise MapError("cell weights must be >= 1 for an admissible heuristic")
    if not (passable[start] and passable[goal]):
        raise NoPathError("start or goal is not passable")
    cost, parent = _astar(passable, weight, int(start[0]), int(start[1]), int(goal[0]), int(goal[1]))
    if not np.isfinite(cost):
        raise NoPathError(f"no path from {start} to {goal}")
    ny = passable.shape[1]
    path = [tuple(goal)]
    idx = parent[goal]
    while idx >= 0:
        path.append((int(idx // ny), int(idx % ny)))
        idx = parent[path[-1]]
    path.reverse()
    return float(cost), [(int(a), int(b)) for a, b in path]


def nearest_passable(passable: np.ndarray, cell, radius_cells: float):
    ii, jj = np.nonzero(passable)
    if len(ii) == 0:
        return None
    d = np.hypot(ii - cell[0], jj - cell[1])
    k = int(np.argmin(d))
    return (int(ii[k]), int(jj[k])) if d[k] <= radius_cells + 1e-9 else None


def astar(occ: OccupancyMap, start_cell, goal_cell, inflation: int = 1,
          unknown_cost: float = UNKNOWN_COST) -> list[tuple[int, int]]:
    """Plan on the agent map: occupied cells (inflated) block, unexplored cells cost 1.5x.

    A blocked goal is replaced by the nearest passable cell within 2 m. When
    inflation disconnects start and goal the plan is retried without it.
    """
    start, goal = tuple(start_cell), tuple(goal_cell)
    if not (occ.inside(start) and occ.inside(goal)):
        raise NoPathError("start or goal outside the map")
    weight = np.where(occ.explored, 1.0, unknown_cost)
    last = None
    for infl in ((inflation, 0) if inflation > 0 else (0,)):
        passable = ~inflate(occ.occupied, infl)
        passable[start] = True
        g = goal if passable[goal] else nearest_passable(passable, goal, SUBSTITUTE_RADIUS / CELL)
        if g is None:
            last = NoPathError(f"no passable cell within 2 m of {goal}")
            continue
        try:
            return astar_grid(passable, weight, start, g)[1]
        except NoPathError as e:
            last = e
    raise last


# -- path following ----------------------------------------------------------------

def _wrap(deg: float) -> float:
    return (deg + 180.0) % 360.0 - 180.0


def segment_clear(blocked: np.ndarray | None, a, b) -> bool:
    if blocked is None:
        return True
    n = max(2, int(math.dist(a, b) / (CELL / 4)) + 1)
    for k in range(n + 1):
        t = k / n
        c = cell_of(a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]))
        if not (0 <= c[0] < blocked.shape[0] and 0 <= c[1] < blocked.shape[1]) or blocked[c]:
            return False
    return True


def path_to_actions(path, pose, blocked: np.ndarray | None = None):
    """Next action to follow `path`; None once the agent is at the final cell.

    Rotates in 30 degree steps until the heading is within 15 degrees of the
    farthest visible waypoint among the next few cells, then moves forward.
    """
    if not path:
        raise MapError("empty path")
    xy = pose.xy
    end = cell_center(*path[-1])
    if math.dist(xy, end) < ARRIVE_RADIUS:
        return None
    here = cell_of(*xy)
    i0 = path.index(here) + 1 if here in path else 1
    target = None
    for cell in path[i0:i0 + LOOKAHEAD]:
        c = cell_center(*cell)
        if math.dist(xy, c) < 1e-9:
            continue
        if segment_clear(blocked, xy, c):
            target = c
        elif target is not None:
            break
    if target is None:
        target = cell_center(*path[min(i0, len(path) - 1)])
        if math.dist(xy, target) < 1e-9:
            target = end
    bearing = math.degrees(math.atan2(target[1] - xy[1], target[0] - xy[0]))
    diff = _wrap(bearing - pose.yaw)
    if abs(diff) <= HEADING_TOL + 1e-9:
        return AgentAction.MoveForward
    return AgentAction.RotateLeft if diff > 0 else AgentAction.RotateRight

