"""Point-mass drop simulation with bounces, sliding and impact events."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .raycast import boxes_to_arrays, segment_blocked
from .world import (
    CELL,
    FallZone,
    ObjectSpec,
    Pose,
    RoomVariant,
    main_free_region,
    material,
    object_box,
    static_occupancy,
)

G = 9.81
SETTLE_APEX = 0.005  # m; post-bounce apex below this settles the object
MIN_IMPACT_SPEED = 0.05  # m/s; slower contacts are absorbed silently
REST_SPEED = 0.01  # m/s
TOI_RESOLUTION = 1e-6  # s
EYE_HEIGHT = 1.2
PLAIN_VIEW_FRACTION = 0.8
TRAJECTORY_PERIOD = 0.01  # s


class PhysicsError(RuntimeError):
    pass


@dataclass(frozen=True)
class ImpactEvent:
    time: float
    position: tuple[float, float, float]
    normal_speed: float
    surface_material: str
    object_material: str
    object_mass: float
    surface_mass: float = math.inf

    @property
    def reduced_mass(self) -> float:
        if math.isinf(self.surface_mass):
            return self.object_mass
        return self.object_mass * self.surface_mass / (self.object_mass + self.surface_mass)


@dataclass(frozen=True)
class FallInit:
    pose: Pose
    velocity: tuple[float, float, float] = (0.0, 0.0, 0.0)
    angular_velocity: tuple[float, float, float] = (0.0, 0.0, 0.0)


@dataclass(frozen=True)
class DropOutcome:
    impacts: tuple[ImpactEvent, ...]
    rest_pose: Pose
    trajectory: tuple[tuple[float, float, float, float], ...]  # (t, x, y, z)
    settled: bool
    end_time: float


@dataclass(frozen=True)
class FilterVerdict:
    keep: bool
    reason: str | None = None
    visibility: float | None = None


def room_solids(room: RoomVariant):
    """(lo, hi, materials) arrays for every solid furnishing part."""
    boxes, mats = [], []
    for f in room.furnishings:
        for part in f.parts():
            boxes.append(part)
            mats.append(f.material)
    lo, hi = boxes_to_arrays(boxes)
    return lo, hi, mats


def _ballistic(p, v, dt):
    p1 = p + v * dt
    p1[2] -= 0.5 * G * dt * dt
    v1 = v.copy()
    v1[2] -= G * dt
    return p1, v1


class _Sim:
    def __init__(self, room, obj, restitution, dt):
        self.room = room
        self.obj = obj
        self.r = obj.radius
        self.dt = dt
        self.restitution = restitution
        lo, hi, self.mats = room_solids(room)
        self.lo = lo - self.r
        self.hi = hi + self.r
        self.top = hi[:, 2] if len(hi) else np.zeros(0)
        self.W, self.D, self.H = room.dims

    def e(self, surface: str) -> float:
        if self.restitution is not None:
            return self.restitution
        return math.sqrt(self.obj.restitution * material(surface).restitution)

    def inside_boxes(self, p) -> np.ndarray:
        tol = 1e-9
        return np.all((p > self.lo + tol) & (p < self.hi - tol), axis=1)

    def penetrating(self, p) -> bool:
        r = self.r
        if p[2] < r - 1e-9 or p[2] > self.H - r:
            return True
        if p[0] < r or p[0] > self.W - r or p[1] < r or p[1] > self.D - r:
            return True
        return bool(self.inside_boxes(p).any()) if len(self.lo) else False

    def support_at(self, p) -> tuple[float, str]:
        """Highest surface under the contact sphere at or below its bottom."""
        best, mat = 0.0, self.room.floor_material
        if len(self.lo):
            xy = p[:2]
            under = np.all((xy >= self.lo[:, :2]) & (xy <= self.hi[:, :2]), axis=1)
            under &= self.top <= p[2] - self.r + 1e-6
            if under.any():
                k = int(np.argmax(np.where(under, self.top, -np.inf)))
                best, mat = float(self.top[k]), self.mats[k]
        return best, mat

    def classify(self, p_out, p_in):
        """Return (axis, surface material, support height or None) for a contact."""
        r = self.r
        if p_in[2] < r - 1e-9:
            return 2, self.room.floor_material, 0.0
        if p_in[2] > self.H - r:
            return 2, self.room.wall_material, None
        if p_in[0] < r or p_in[0] > self.W - r:
            return 0, self.room.wall_material, None
        if p_in[1] < r or p_in[1] > self.D - r:
            return 1, self.room.wall_material, None
        ks = np.flatnonzero(self.inside_boxes(p_in))
        k = int(ks[0])
        lo, hi = self.lo[k], self.hi[k]
        outside = (p_out <= lo) | (p_out >= hi)
        if outside[2] and p_out[2] >= hi[2]:
            return 2, self.mats[k], float(self.top[k])
        if outside[2]:
            return 2, self.mats[k], None
        axes = np.flatnonzero(outside[:2])
        if len(axes) == 0:
            # started inside (numerical corner case): least-penetrated axis
            pen = np.minimum(p_in - lo, hi - p_in)
            return int(np.argmin(pen)), self.mats[k], None
        return int(axes[0]), self.mats[k], None


def simulate_drop(room: RoomVariant, obj: ObjectSpec, init: FallInit, dt: float = 1e-3,
                  max_t: float = 5.0, restitution: float | None = None) -> DropOutcome:
    """Drop `obj` from `init` and integrate until it rests or `max_t` elapses.

    Flight uses the closed-form gravity update per step; contacts are located
    by bisection to 1 us inside the crossing step. `restitution` overrides the
    combined object/surface coefficient.
    """
    if not 0 < dt <= 5e-3:
        raise PhysicsError(f"dt must lie in (0, 5 ms], got {dt}")
    sim = _Sim(room, obj, restitution, dt)
    r = sim.r
    p = np.array(init.pose.position, dtype=float)
    v = np.array(init.velocity, dtype=float)
    if sim.penetrating(p) and p[2] >= r - 1e-9:
        raise PhysicsError("initial position penetrates a solid")

    impacts: list[ImpactEvent] = []
    traj = [(0.0, *map(float, p))]
    t = 0.0
    mode = "flight"
    support = None
    settled = False
    next_sample = TRAJECTORY_PERIOD
    step = 0

    def emit(time, pos, speed, surface):
        if speed >= MIN_IMPACT_SPEED:
            impacts.append(ImpactEvent(round(time, 9), tuple(float(c) for c in pos), float(speed),
                                       surface, obj.material, obj.mass))

    while t < max_t - 1e-12:
        step += 1
        if mode == "flight":
            remaining = dt
            for _ in range(16):
                p1, v1 = _ballistic(p, v, remaining)
                if not sim.penetrating(p1):
                    p, v = p1, v1
                    break
                lo_t, hi_t = 0.0, remaining
                while hi_t - lo_t > TOI_RESOLUTION:
                    mid = 0.5 * (lo_t + hi_t)
                    if sim.penetrating(_ballistic(p, v, mid)[0]):
                        hi_t = mid
                    else:
                        lo_t = mid
                pc, vc = _ballistic(p, v, lo_t)
                p_in = _ballistic(p, v, hi_t)[0]
                axis, surface, sup = sim.classify(pc, p_in)
                tc = t + (dt - remaining) + lo_t
                vn = abs(vc[axis])
                emit(tc, pc, vn, surface)
                e = sim.e(surface)
                vc[axis] = -vc[axis] * e
                if axis == 2 and sup is not None:
                    damp = max(0.0, 1.0 - obj.friction * 0.5)
                    vc[0] *= damp
                    vc[1] *= damp
                    if vc[2] ** 2 / (2 * G) < SETTLE_APEX:
                        vc[2] = 0.0
                        pc[2] = sup + r
                        mode, support = "slide", sup
                p, v = pc, vc
                remaining -= lo_t
                if mode == "slide":
                    break
        else:
            speed = math.hypot(v[0], v[1])
            if speed < REST_SPEED:
                v[:] = 0.0
                settled = True
                t += dt
                break
            new_speed = max(speed - obj.friction * G * dt, 0.0)
            v[:2] *= new_speed / speed
            p1 = p.copy()
            p1[:2] += v[:2] * dt
            if sim.penetrating(p1):
                axis, surface, _ = sim.classify(p, p1)
                axis = axis if axis < 2 else 0
                emit(t + dt, p, abs(v[axis]), surface)
                v[axis] = -v[axis] * sim.e(surface)
            else:
                p = p1
                sup, _ = sim.support_at(p)
                if sup < support - 1e-6:
                    mode, support = "flight", None
        t += dt
        if not (np.isfinite(p).all() and np.isfinite(v).all()):
            raise PhysicsError(f"non-finite state at step {step}")
        assert p[2] >= r - 1e-6, f"object escaped through the floor at step {step}"
        if t >= next_sample - 1e-12:
            traj.append((round(t, 9), *map(float, p)))
            next_sample += TRAJECTORY_PERIOD

    if settled and traj[-1][0] != round(t, 9):
        traj.append((round(t, 9), *map(float, p)))
    rest = Pose(tuple(float(c) for c in p), init.pose.yaw, 0.0)
    return DropOutcome(tuple(impacts), rest, tuple(traj), settled, round(t, 9))


# -- rehearsal filter ----------------------------------------------------------

def eye_points(room: RoomVariant, occ=None) -> np.ndarray:
    occ = static_occupancy(room) if occ is None else occ
    ii, jj = np.nonzero(main_free_region(occ))
    return np.stack([(ii + 0.5) * CELL, (jj + 0.5) * CELL, np.full(len(ii), EYE_HEIGHT)], axis=1)


def visibility_fraction(room: RoomVariant, obj: ObjectSpec, position, occ=None,
                        eyes: np.ndarray | None = None) -> float:
    """Share of free cells with line of sight from eye height to the object's top."""
    eyes = eye_points(room, occ) if eyes is None else eyes
    if len(eyes) == 0:
        return 0.0
    box = object_box(obj, position)
    target = np.array([box.center[0], box.center[1], box.hi[2] - 1e-4])
    lo, hi, _ = room_solids(room)
    blocked = segment_blocked(eyes, np.broadcast_to(target, eyes.shape), lo, hi)
    return float(1.0 - blocked.mean())


def in_zone(zone: FallZone, position) -> bool:
    return zone.region.contains(position, tol=1e-6)


def rehearsal_filter(outcome: DropOutcome, zone: FallZone, room: RoomVariant,
                     obj: ObjectSpec, occ=None, eyes=None) -> FilterVerdict:
    if not outcome.settled:
        return FilterVerdict(False, "not_settled")
    pos = outcome.rest_pose.position
    if not in_zone(zone, pos):
        return FilterVerdict(False, "out_of_zone")
    vis = visibility_fraction(room, obj, pos, occ, eyes)
    if vis >= PLAIN_VIEW_FRACTION:
        return FilterVerdict(False, "plain_view", vis)
    return FilterVerdict(True, None, vis)
