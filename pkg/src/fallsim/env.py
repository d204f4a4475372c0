"""Embodied search environment: reset/step, egocentric views, success and reward."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path

import numpy as np

from .audio import BinauralClip, object_mode_bank, render_episode_audio
from .camera import DEFAULT_RESOLUTION, SceneGeometry
from .geodesic import distance_field
from .world import CELL, Pose, cell_center, cell_of, main_free_region, static_occupancy

MAX_STEPS = 200
MOVE_STEP = 0.25
TURN_DEG = 30.0
LOOK_DEG = 30.0
PITCH_LIMIT = 60.0
SUCCESS_DISTANCE = 2.0
COLLISION_SAMPLES = 10


class EnvError(RuntimeError):
    pass


class AgentAction(str, Enum):
    MoveForward = "MoveForward"
    RotateLeft = "RotateLeft"
    RotateRight = "RotateRight"
    LookUp = "LookUp"
    LookDown = "LookDown"
    Found = "Found"


ACTIONS = tuple(AgentAction)


@dataclass(frozen=True)
class RewardConfig:
    r_closer: float = 1.0
    r_farther: float = -1.0
    r_found: float = 10.0
    r_step: float = -0.01


@dataclass(frozen=True)
class Outcome:
    success: bool
    reason: str | None = None  # too_far | not_visible | timeout


@dataclass(frozen=True, eq=False)
class Observation:
    depth: np.ndarray
    semantic: np.ndarray
    audio: BinauralClip | None
    pose: Pose
    step_index: int


def target_cells(occ: np.ndarray, xy, slack: float = CELL):
    """Reachable free cells nearest (within `slack`) to the horizontal point `xy`."""
    free = main_free_region(occ)
    ii, jj = np.nonzero(free)
    d = np.hypot((ii + 0.5) * CELL - xy[0], (jj + 0.5) * CELL - xy[1])
    keep = d <= d.min() + slack + 1e-9
    return list(zip(ii[keep].tolist(), jj[keep].tolist()))


class EnvContext:
    """Per-scene precomputation shared by every state of an episode."""

    def __init__(self, scene, resolution: int = DEFAULT_RESOLUTION):
        self.scene = scene
        self.resolution = resolution
        self.geometry = SceneGeometry.of_scene(scene)
        self.occ = static_occupancy(scene.room)
        self.goal_cells = target_cells(self.occ, scene.rest_pose.xy)
        self.field = distance_field(~self.occ, self.goal_cells)

    def geodesic(self, pose: Pose) -> float:
        return float(self.field[cell_of(*pose.xy)])

    def free(self, x: float, y: float) -> bool:
        ix, iy = cell_of(x, y)
        nx, ny = self.occ.shape
        return 0 <= ix < nx and 0 <= iy < ny and not self.occ[ix, iy]

    def render(self, pose: Pose):
        return self.geometry.render(pose, self.resolution)


@dataclass(frozen=True)
class EpisodeState:
    scene: object
    agent: Pose
    step_index: int = 0
    done: bool = False
    outcome: Outcome | None = None
    path_traveled: float = 0.0
    collisions: int = 0
    last_collision: bool = False
    ctx: EnvContext = field(default=None, compare=False, repr=False)


def episode_audio(scene, listener: Pose | None = None) -> BinauralClip:
    listener = scene.agent_spawn if listener is None else listener
    bank = object_mode_bank(scene.target, scene.seed)
    return render_episode_audio(scene.impacts, scene.room, listener, bank)


def reset(scene, resolution: int = DEFAULT_RESOLUTION, audio: BinauralClip | None = None,
          ctx: EnvContext | None = None):
    """Start an episode at the scene's spawn pose; the step-0 observation carries the audio."""
    ctx = EnvContext(scene, resolution) if ctx is None else ctx
    spawn = scene.agent_spawn
    if not ctx.free(*spawn.xy):
        raise EnvError(f"spawn {spawn.xy} is not in free space")
    audio = episode_audio(scene) if audio is None else audio
    state = EpisodeState(scene, spawn, ctx=ctx)
    depth, sem = ctx.render(spawn)
    return state, Observation(depth, sem, audio, spawn, 0)


def _move(ctx: EnvContext, pose: Pose):
    y = math.radians(pose.yaw)
    x0, y0 = pose.xy
    dx, dy = MOVE_STEP * math.cos(y), MOVE_STEP * math.sin(y)
    for k in range(1, COLLISION_SAMPLES + 1):
        f = k / COLLISION_SAMPLES
        if not ctx.free(x0 + f * dx, y0 + f * dy):
            return None
    return Pose((x0 + dx, y0 + dy, pose.position[2]), pose.yaw, pose.pitch)


def apply_action(ctx: EnvContext, pose: Pose, action: AgentAction):
    """Kinematics only: returns (new pose, collided)."""
    if action == AgentAction.MoveForward:
        moved = _move(ctx, pose)
        return (pose, True) if moved is None else (moved, False)
    if action in (AgentAction.RotateLeft, AgentAction.RotateRight):
        d = TURN_DEG if action == AgentAction.RotateLeft else -TURN_DEG
        return replace(pose, yaw=(pose.yaw + d) % 360.0), False
    if action in (AgentAction.LookUp, AgentAction.LookDown):
        d = LOOK_DEG if action == AgentAction.LookUp else -LOOK_DEG
        return replace(pose, pitch=min(max(pose.pitch + d, -PITCH_LIMIT), PITCH_LIMIT)), False
    return pose, False


def target_distance(state: EpisodeState) -> float:
    return math.dist(state.agent.xy, state.scene.rest_pose.xy)


def target_visible(ctx: EnvContext, pose: Pose) -> bool:
    _, sem = ctx.render(pose)
    return bool((sem == ctx.scene.target.category_index).any())


def check_success(state: EpisodeState) -> Outcome:
    """Found succeeds within 2 m (horizontal) of a target visible in the current view."""
    if state.step_index > MAX_STEPS:
        return Outcome(False, "timeout")
    if target_distance(state) >= SUCCESS_DISTANCE:
        return Outcome(False, "too_far")
    if not target_visible(state.ctx, state.agent):
        return Outcome(False, "not_visible")
    return Outcome(True)


def compute_reward(prev: EpisodeState, state: EpisodeState, action, cfg: RewardConfig | None = None) -> float:
    cfg = RewardConfig() if cfg is None else cfg
    r = cfg.r_step
    d0, d1 = prev.ctx.geodesic(prev.agent), state.ctx.geodesic(state.agent)
    if d1 < d0:
        r += cfg.r_closer
    elif d1 > d0:
        r += cfg.r_farther
    if AgentAction(action) == AgentAction.Found and state.outcome is not None and state.outcome.success:
        r += cfg.r_found
    return r


def step(state: EpisodeState, action, cfg: RewardConfig | None = None, render: bool = True):
    """Advance one action; returns (state', observation, reward, done)."""
    if state.done:
        raise EnvError("episode already finished")
    action = AgentAction(action)
    ctx = state.ctx
    pose, collided = apply_action(ctx, state.agent, action)
    moved = MOVE_STEP if action == AgentAction.MoveForward and not collided else 0.0
    new = replace(state, agent=pose, step_index=state.step_index + 1,
                  path_traveled=state.path_traveled + moved,
                  collisions=state.collisions + int(collided), last_collision=collided)
    if action == AgentAction.Found:
        new = replace(new, done=True, outcome=check_success(new))
    elif new.step_index >= MAX_STEPS:
        new = replace(new, done=True, outcome=Outcome(False, "timeout"))
    reward = compute_reward(state, new, action, cfg)
    if render:
        depth, sem = ctx.render(pose)
    else:
        depth = sem = None
    return new, Observation(depth, sem, None, pose, new.step_index), reward, new.done


# -- trajectory logs -------------------------------------------------------------

def log_record(state: EpisodeState, action, reward: float) -> dict:
    p = state.agent
    return {"step": state.step_index, "action": AgentAction(action).value,
            "pose": [*p.position, p.yaw, p.pitch], "reward": reward,
            "collision": state.last_collision}


def write_log(records, path) -> Path:
    path = Path(path)
    with path.open("w") as f:
        for r in records:
            f.write(json.dumps(r) + "\n")
    return path


def read_log(path) -> list[dict]:
    return [json.loads(line) for line in Path(path).read_text().splitlines() if line.strip()]


def run_actions(scene, actions, ctx: EnvContext | None = None, cfg: RewardConfig | None = None):
    """Replay `actions` from the spawn; returns (final state, log records)."""
    ctx = EnvContext(scene) if ctx is None else ctx
    state = EpisodeState(scene, scene.agent_spawn, ctx=ctx)
    if not ctx.free(*scene.agent_spawn.xy):
        raise EnvError("spawn is not in free space")
    records = []
    for a in actions:
        if state.done:
            break
        new, _, r, _ = step(state, a, cfg, render=False)
        records.append(log_record(new, a, r))
        state = new
    return state, records


def replay_log(scene, path, ctx: EnvContext | None = None) -> bool:
    """True iff re-executing the logged actions reproduces every record exactly."""
    records = read_log(path)
    _, again = run_actions(scene, [r["action"] for r in records], ctx)
    return json.loads(json.dumps(again)) == records
