"""Modular planning agent (audio goal -> sweep -> explore -> approach -> declare) and baselines."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .env import MAX_STEPS, AgentAction
from .mapping import (
    NoPathError,
    OccupancyMap,
    SemanticGoalMap,
    astar,
    frontiers,
    fuse,
    mask_center,
    path_to_actions,
    project_local_maps,
)
from .perception import GoalEstimate, SegNoiseModel, segment
from .world import CELL, CATEGORIES, cell_center, cell_of

NAV_PITCH = -30.0
TOP_K = 5
FOUND_DISTANCE = 2.0
DECLARE_MARGIN = 0.15
ARRIVE_AUDIO_GOAL = 1.0
APPROACH_RADIUS = 1.5
FRONTIER_GOAL_WEIGHT = 1.0
SWEEP = (AgentAction.RotateLeft, AgentAction.LookDown, AgentAction.RotateLeft, AgentAction.LookUp) * 6
APPROACH_PITCHES = (-30.0, -60.0, 0.0)
APPROACH_BUDGET = 40
INSPECT_RING = (0.5, 1.4)
INSPECT_POINTS = 6

PHASES = ("GoToAudioGoal", "Sweep", "Explore", "Approach", "Inspect", "Declare")


@dataclass(frozen=True)
class OracleFlags:
    gt_seg: bool = False
    gt_object: bool = False
    gt_location: bool = False

    @classmethod
    def parse(cls, names) -> OracleFlags:
        names = set(names or ())
        unknown = names - {"seg", "object", "location"}
        if unknown:
            raise ValueError(f"unknown oracle flags {sorted(unknown)}")
        return cls("seg" in names, "object" in names, "location" in names)

    @property
    def label(self) -> str:
        on = [n for n, f in (("seg", self.gt_seg), ("object", self.gt_object), ("location", self.gt_location)) if f]
        return "+".join(on) if on else "none"


@dataclass(frozen=True)
class Truth:
    """Ground truth handed to the planner only for the enabled oracle swaps."""
    category: str
    position: tuple[float, float]


@dataclass(eq=False)
class PlannerState:
    phase: str
    goal: GoalEstimate
    occ: OccupancyMap
    sem: SemanticGoalMap
    flags: OracleFlags = OracleFlags()
    noise: SegNoiseModel | None = None
    current_path: list = field(default_factory=list)
    path_goal: tuple | None = None
    sweep_queue: list = field(default_factory=list)
    swept: bool = False
    target_cell: tuple | None = None
    rejected: set = field(default_factory=set)
    approach_tries: int = 0
    approach_steps: int = 0
    inspect_points: list | None = None
    inspect_tries: int = 0
    last_action: AgentAction | None = None
    last_pose: object = None
    phase_log: list = field(default_factory=list)

    @property
    def maps(self):
        return self.occ, self.sem

    @property
    def ranking(self) -> list[str]:
        return self.goal.top_categories

    def top(self, k: int = TOP_K) -> list[int]:
        index = {c.id: c.index for c in CATEGORIES}
        return [index[c] for c in self.ranking[:k]]

    def set_phase(self, phase: str, step: int):
        if phase != self.phase:
            self.phase = phase
            self.phase_log.append((step, phase))


def init_planner(goal: GoalEstimate, room_dims, flags: OracleFlags = OracleFlags(),
                 truth: Truth | None = None, noise: SegNoiseModel | None = None) -> PlannerState:
    """Planner seeded from the step-0 audio estimate, with oracle substitutions applied."""
    if (flags.gt_object or flags.gt_location) and truth is None:
        raise ValueError("oracle flags need ground truth")
    ranking = list(goal.category_ranking)
    if flags.gt_object:
        ranking = [(truth.category, 1.0)] + [r for r in ranking if r[0] != truth.category]
    position = truth.position if flags.gt_location else goal.position
    goal = GoalEstimate(tuple(position), goal.bearing, goal.distance, tuple(ranking))
    occ = OccupancyMap.for_room(room_dims)
    ps = PlannerState("GoToAudioGoal", goal, occ, SemanticGoalMap.empty(occ.shape), flags,
                      None if flags.gt_seg else (SegNoiseModel.default() if noise is None else noise))
    ps.phase_log.append((0, "GoToAudioGoal"))
    return ps


def visible_candidates(seg_masks, top, depth, pose):
    """(rank, horizontal distance, category) of every visible mask in the top-k list."""
    out = []
    for cat, mask in seg_masks.items():
        if cat not in top or not mask.any():
            continue
        p = mask_center(mask, depth, pose)
        out.append((top.index(cat), math.dist(p[:2], pose.xy), cat))
    return sorted(out)


def found_decision(seg_masks, goal: GoalEstimate | list, depth, pose=None,
                   max_distance: float = FOUND_DISTANCE, k: int = TOP_K) -> bool:
    """True iff a visible mask of a top-k category lies closer than `max_distance`.

    Without a pose the along-ray depth of the mask center is used.
    """
    if isinstance(goal, GoalEstimate):
        index = {c.id: c.index for c in CATEGORIES}
        top = [index[c] for c in goal.top_categories[:k]]
    else:
        top = list(goal)[:k]
    for cat, mask in seg_masks.items():
        if cat not in top or not mask.any():
            continue
        if pose is None:
            rows, cols = np.nonzero(mask)
            d = float(np.median(depth[rows, cols]))
        else:
            d = math.dist(mask_center(mask, depth, pose)[:2], pose.xy)
        if d < max_distance:
            return True
    return False


def _clamp_cell(occ: OccupancyMap, cell):
    return (min(max(cell[0], 0), occ.shape[0] - 1), min(max(cell[1], 0), occ.shape[1] - 1))


def _follow(ps: PlannerState, pose, goal_cell):
    """Next action toward `goal_cell`, replanning on map changes; None on arrival."""
    start = cell_of(*pose.xy)
    goal_cell = _clamp_cell(ps.occ, goal_cell)
    replan = (ps.path_goal != goal_cell or not ps.current_path
              or any(ps.occ.occupied[c] for c in ps.current_path[1:]) or start not in ps.current_path)
    if replan:
        ps.current_path = astar(ps.occ, start, goal_cell)
        ps.path_goal = goal_cell
    i = ps.current_path.index(start)
    ps.current_path = ps.current_path[i:]
    if len(ps.current_path) == 1 and math.dist(pose.xy, cell_center(*start)) < 0.2:
        return None
    return path_to_actions(ps.current_path, pose, ps.occ.occupied)


def _pitch_to(pose, pitch: float):
    if pose.pitch < pitch - 1e-9:
        return AgentAction.LookUp
    if pose.pitch > pitch + 1e-9:
        return AgentAction.LookDown
    return None


def _face(pose, xy):
    bearing = math.degrees(math.atan2(xy[1] - pose.xy[1], xy[0] - pose.xy[0]))
    diff = (bearing - pose.yaw + 180.0) % 360.0 - 180.0
    if abs(diff) <= 15.0 + 1e-9:
        return None
    return AgentAction.RotateLeft if diff > 0 else AgentAction.RotateRight


def _best_candidate(ps: PlannerState):
    top = ps.top()
    cands = [(cell, cat) for cell, cat in ps.sem.candidates() if cat in top and cell not in ps.rejected]
    if not cands:
        return None
    gx, gy = ps.goal.position
    return min(cands, key=lambda cc: (top.index(cc[1]), math.dist(cell_center(*cc[0]), (gx, gy)), cc[0]))[0]


def _frontier_goal(ps: PlannerState, pose):
    here = cell_of(*pose.xy)
    fs = frontiers(ps.occ, here)
    if not fs:
        return None
    gx, gy = ps.goal.position

    def score(f):
        c = cell_center(*f.centroid)
        return f.distance * CELL + FRONTIER_GOAL_WEIGHT * math.dist(c, (gx, gy)) - 0.02 * f.size

    best = min(fs, key=score)
    return min(best.cells, key=lambda c: (math.dist(c, here), c))


def _bump(ps: PlannerState, pose):
    """Record a blocked forward move as an obstacle in the cell ahead."""
    y = math.radians(pose.yaw)
    for f in (0.25, 0.15):
        c = cell_of(pose.xy[0] + f * math.cos(y), pose.xy[1] + f * math.sin(y))
        if ps.occ.inside(c) and c != cell_of(*pose.xy):
            ps.occ.occupied[c] = True
            ps.occ.explored[c] = True
            break
    ps.current_path = []


def modular_policy_step(ps: PlannerState, obs) -> AgentAction:
    action = _decide(ps, obs)
    ps.last_action = action
    ps.last_pose = obs.pose
    return action


def _decide(ps: PlannerState, obs) -> AgentAction:
    pose, step = obs.pose, obs.step_index
    masks = segment(obs.semantic, ps.noise)
    local = project_local_maps(obs.depth, masks, pose, ps.occ.shape, ps.occ.origin)
    ps.occ, ps.sem = fuse(ps.occ, ps.sem, local)
    here = cell_of(*pose.xy)
    if ps.occ.inside(here):
        ps.occ.explored[here] = True
        ps.occ.occupied[here] = False
    if ps.last_action == AgentAction.MoveForward and ps.last_pose is not None and ps.last_pose.xy == pose.xy:
        _bump(ps, pose)

    if _should_declare(ps, masks, obs.depth, pose):
        ps.set_phase("Declare", step)
        return AgentAction.Found
    if step >= MAX_STEPS - 1:
        ps.set_phase("Declare", step)
        return AgentAction.Found

    cand = _best_candidate(ps)
    if cand is not None and (ps.phase != "Approach" or cand != ps.target_cell):
        ps.set_phase("Approach", step)
        ps.target_cell, ps.approach_tries, ps.approach_steps = cand, 0, 0
        ps.sweep_queue = []

    for _ in range(4):
        a = _phase_action(ps, pose, step)
        if a is not None:
            return a
    ps.set_phase("Declare", step)
    return AgentAction.Found


def _should_declare(ps: PlannerState, masks, depth, pose) -> bool:
    """Declare on the best-ranked visible candidate unless a better-ranked one is still pending.

    Lower-ranked categories are only accepted after the sweep at the audio goal.
    """
    top = ps.top()
    vis = [v for v in visible_candidates(masks, top, depth, pose) if v[1] < FOUND_DISTANCE - DECLARE_MARGIN]
    if not vis:
        return False
    rank = vis[0][0]
    if rank == 0:
        return True
    if not ps.swept:
        return False
    pending = [cat for cell, cat in ps.sem.candidates() if cat in top and cell not in ps.rejected]
    return all(top.index(cat) >= rank for cat in pending)


def _reject_target(ps: PlannerState, step: int):
    ps.rejected.add(ps.target_cell)
    ps.target_cell = None
    ps.set_phase("Explore", step)


def _inspection_points(ps: PlannerState, pose):
    """Reachable free cells on a ring around the goal, spread in angle."""
    gx, gy = ps.goal.position
    free = ps.occ.free
    ii, jj = np.nonzero(free)
    cx, cy = (ii + 0.5) * CELL, (jj + 0.5) * CELL
    d = np.hypot(cx - gx, cy - gy)
    keep = (d >= INSPECT_RING[0]) & (d <= INSPECT_RING[1])
    by_sector = {}
    for x, y, i, j in zip(cx[keep], cy[keep], ii[keep], jj[keep]):
        sector = int(((math.degrees(math.atan2(y - gy, x - gx)) + 360.0) % 360.0) // (360.0 / INSPECT_POINTS))
        key = (abs(math.hypot(x - gx, y - gy) - 1.0), int(i), int(j))
        if sector not in by_sector or key < by_sector[sector]:
            by_sector[sector] = key
    here = pose.xy
    pts = [(i, j) for _, i, j in by_sector.values()]
    return sorted(pts, key=lambda c: (math.dist(cell_center(*c), here), c))


def _phase_action(ps: PlannerState, pose, step):
    if ps.phase == "Approach":
        if ps.target_cell is None or ps.target_cell in ps.rejected:
            ps.set_phase("Explore", step)
            return None
        ps.approach_steps += 1
        if ps.approach_steps > APPROACH_BUDGET:
            _reject_target(ps, step)
            return None
        c = cell_center(*ps.target_cell)
        if math.dist(pose.xy, c) <= APPROACH_RADIUS:
            # close: face the candidate and scan pitches before giving up on it
            a = _face(pose, c)
            if a is not None:
                return a
            if ps.approach_tries < len(APPROACH_PITCHES):
                a = _pitch_to(pose, APPROACH_PITCHES[ps.approach_tries])
                ps.approach_tries += 1
                if a is not None:
                    return a
                return _phase_action(ps, pose, step)
            _reject_target(ps, step)
            return None
        a = _pitch_to(pose, NAV_PITCH)
        if a is not None:
            return a
        try:
            a = _follow(ps, pose, ps.target_cell)
        except NoPathError:
            a = None
        if a is None:
            _reject_target(ps, step)
        return a

    if ps.phase == "GoToAudioGoal":
        gx, gy = ps.goal.position
        if math.dist(pose.xy, (gx, gy)) <= ARRIVE_AUDIO_GOAL:
            ps.set_phase("Sweep", step)
            return None
        a = _pitch_to(pose, NAV_PITCH)
        if a is not None:
            return a
        try:
            a = _follow(ps, pose, cell_of(gx, gy))
        except NoPathError:
            a = None
        if a is None:
            ps.set_phase("Sweep", step)
        return a

    if ps.phase == "Sweep":
        if not ps.swept:
            ps.swept = True
            ps.sweep_queue = list(SWEEP)
            a = _pitch_to(pose, NAV_PITCH)
            if a is not None:
                ps.sweep_queue.insert(0, a)
        if ps.sweep_queue:
            return ps.sweep_queue.pop(0)
        ps.set_phase("Explore", step)
        return None

    if ps.phase == "Explore":
        a = _pitch_to(pose, NAV_PITCH)
        if a is not None:
            return a
        for _ in range(3):
            goal = _frontier_goal(ps, pose)
            if goal is None:
                ps.set_phase("Inspect", step)
                return None
            try:
                a = _follow(ps, pose, goal)
            except NoPathError:
                a = None
            if a is not None:
                return a
            # unreachable or reached: mark the frontier cell explored-around and retry
            ps.occ.explored[max(goal[0] - 1, 0):goal[0] + 2, max(goal[1] - 1, 0):goal[1] + 2] = True
            ps.current_path = []
        ps.set_phase("Inspect", step)
        return None

    if ps.phase == "Inspect":
        if ps.inspect_points is None:
            ps.inspect_points = _inspection_points(ps, pose)
        while ps.inspect_points:
            cell = ps.inspect_points[0]
            c = cell_center(*cell)
            if math.dist(pose.xy, c) > 0.2:
                a = _pitch_to(pose, NAV_PITCH)
                if a is not None:
                    return a
                try:
                    a = _follow(ps, pose, cell)
                except NoPathError:
                    a = None
                if a is not None:
                    return a
                if math.dist(pose.xy, c) > 0.3:
                    ps.inspect_points.pop(0)
                    continue
            a = _face(pose, ps.goal.position)
            if a is not None:
                return a
            if ps.inspect_tries < len(APPROACH_PITCHES):
                a = _pitch_to(pose, APPROACH_PITCHES[ps.inspect_tries])
                ps.inspect_tries += 1
                if a is not None:
                    return a
                continue
            ps.inspect_points.pop(0)
            ps.inspect_tries = 0
        return None
    return None


# -- baselines ---------------------------------------------------------------------

class RandomAgent:
    """Uniformly random actions from a seeded generator."""

    def __init__(self, seed: int = 0):
        self.rng = np.random.default_rng([seed & 0xFFFFFFFF, 99])

    def act(self, obs) -> AgentAction:
        return list(AgentAction)[int(self.rng.integers(len(AgentAction)))]
