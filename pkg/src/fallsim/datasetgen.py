"""Two-phase dataset pipeline: rehearse drops, generate episodes, expert demos, manifests."""
from __future__ import annotations

import json
import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

from .audio import BinauralClip, write_wav
from .env import (
    AgentAction,
    EnvContext,
    apply_action,
    episode_audio,
    run_actions,
    target_visible,
    write_log,
)
from .mapping import NoPathError, OccupancyMap, astar, path_to_actions
from .physics import FallInit, ImpactEvent, eye_points, rehearsal_filter, simulate_drop
from .scenes import SceneInstance, save_scene
from .world import (
    CATEGORIES,
    CELL,
    ObjectSpec,
    Pose,
    RoomVariant,
    cell_center,
    cell_of,
    main_free_region,
    place_distractors,
    standard_variants,
    static_occupancy,
)

log = logging.getLogger(__name__)

MANIFEST_VERSION = 1
DROP_HEIGHT = (0.3, 1.0)
VELOCITY_JITTER = 0.3
SPAWN_MIN_DISTANCE = 1.5
VIEW_DISTANCE = 1.6
EXPERT_PITCHES = (-30.0, -60.0, 0.0, 30.0)
MAX_VIEWPOINTS = 6
SPLITS = ("train", "val", "test")
CROSS_SCENES = {"kitchen->study": ("kitchen", "study"), "study->kitchen": ("study", "kitchen")}


@dataclass(frozen=True)
class FallRecord:
    room_id: str
    zone_id: int
    target: ObjectSpec
    fall_init: FallInit
    rest_pose: Pose
    impacts: tuple[ImpactEvent, ...]
    visibility: float
    trial: int


@dataclass(eq=False)
class Episode:
    scene: SceneInstance
    audio: BinauralClip
    expert: list
    l: float
    split: str = "train"
    episode_id: str = ""
    audio_path: str | None = None

    @property
    def n_star(self) -> int:
        return len(self.expert)

    @property
    def impact_count(self) -> int:
        return len(self.scene.impacts)


@dataclass
class DatasetConfig:
    n_instances: int = 200
    master_seed: int = 0
    split_fractions: tuple[float, float, float] = (0.75, 0.125, 0.125)
    rooms: list | None = None
    zones_per_room: int = 20
    cross_scene: tuple[str, ...] = ("kitchen->study", "study->kitchen")
    distractors: tuple[int, int] = (1, 3)
    trials_per_attempt: int = 10
    attempts_per_instance: int = 4

    def split_sizes(self) -> tuple[int, int, int]:
        n = self.n_instances
        val = int(round(n * self.split_fractions[1]))
        test = int(round(n * self.split_fractions[2]))
        return n - val - test, val, test


@lru_cache(maxsize=128)
def _room_cache(room: RoomVariant):
    occ = static_occupancy(room)
    return occ, eye_points(room, occ)


def _start_pose(zone, obj: ObjectSpec, rng) -> Pose:
    r = obj.radius
    lo, hi = zone.region.lo, zone.region.hi
    x = rng.uniform(lo[0] + r, hi[0] - r) if hi[0] - lo[0] > 2 * r else zone.region.center[0]
    y = rng.uniform(lo[1] + r, hi[1] - r) if hi[1] - lo[1] > 2 * r else zone.region.center[1]
    z = zone.support_height + r + rng.uniform(*DROP_HEIGHT)
    return Pose((float(x), float(y), float(z)), float(rng.integers(0, 360)), 0.0)


def rehearse(variant: RoomVariant, n_trials: int, seed: int, categories=None, zone_ids=None):
    """Drop randomized objects over fall zones; keep those that stay in-zone and hidden.

    Returns ``(records, rejections)`` where ``rejections`` counts each reason.
    """
    if n_trials <= 0:
        raise ValueError("n_trials must be positive")
    occ, eyes = _room_cache(variant)
    cats = [c.id for c in CATEGORIES] if categories is None else list(categories)
    zones = list(range(len(variant.fall_zones))) if zone_ids is None else list(zone_ids)
    records, rejections = [], Counter()
    for trial in range(n_trials):
        rng = np.random.default_rng([seed & 0xFFFFFFFF, seed >> 32, trial, 41])
        zone = variant.fall_zones[zones[int(rng.integers(len(zones)))]]
        obj = ObjectSpec.default(cats[int(rng.integers(len(cats)))], float(rng.uniform(0.8, 1.2)))
        init = FallInit(_start_pose(zone, obj, rng),
                        (float(rng.uniform(-VELOCITY_JITTER, VELOCITY_JITTER)),
                         float(rng.uniform(-VELOCITY_JITTER, VELOCITY_JITTER)), 0.0),
                        tuple(float(v) for v in rng.uniform(-2, 2, 3)))
        try:
            outcome = simulate_drop(variant, obj, init)
        except Exception as e:  # a start pose inside a solid counts as a failed trial
            rejections["invalid_start"] += 1
            log.debug("trial %d: %s", trial, e)
            continue
        verdict = rehearsal_filter(outcome, zone, variant, obj, occ, eyes)
        if not verdict.keep:
            rejections[verdict.reason] += 1
            continue
        records.append(FallRecord(variant.id, zone.id, obj, init, outcome.rest_pose, outcome.impacts,
                                  verdict.visibility, trial))
    return records, dict(rejections)


# -- expert ----------------------------------------------------------------------

def _drive(ctx: EnvContext, pose: Pose, path, budget: int):
    """Follow a static-map path with the greedy controller; returns (actions, pose) or None."""
    actions = []
    plan = path
    occ = ctx.occ
    while len(actions) < budget:
        a = path_to_actions(plan, pose, occ)
        if a is None:
            return actions, pose
        new, collided = apply_action(ctx, pose, a)
        actions.append(a)
        if collided:
            full = OccupancyMap(occ.copy(), np.ones_like(occ), np.zeros(occ.shape, np.int16))
            try:
                plan = astar(full, cell_of(*pose.xy), plan[-1], inflation=0)
            except NoPathError:
                return None
            # sidestep the blocking heading before retrying
            new, _ = apply_action(ctx, pose, AgentAction.RotateLeft)
            actions[-1] = AgentAction.RotateLeft
        pose = new
    return None


def _finish_view(ctx: EnvContext, pose: Pose, target_xy):
    """Rotate to face the target, then search pitch (and small yaw offsets) until it is visible."""
    actions = []
    bearing = math.degrees(math.atan2(target_xy[1] - pose.xy[1], target_xy[0] - pose.xy[0]))
    diff = (bearing - pose.yaw + 180.0) % 360.0 - 180.0
    turn = AgentAction.RotateLeft if diff > 0 else AgentAction.RotateRight
    for _ in range(int(round(abs(diff) / 30.0))):
        pose, _ = apply_action(ctx, pose, turn)
        actions.append(turn)
    for yaw_moves in ((), (AgentAction.RotateLeft,), (AgentAction.RotateRight, AgentAction.RotateRight)):
        for a in yaw_moves:
            pose, _ = apply_action(ctx, pose, a)
            actions.append(a)
        for pitch in EXPERT_PITCHES:
            while pose.pitch != pitch:
                a = AgentAction.LookDown if pose.pitch > pitch else AgentAction.LookUp
                pose, _ = apply_action(ctx, pose, a)
                actions.append(a)
            if target_visible(ctx, pose):
                return actions + [AgentAction.Found], pose
    return None


def viewpoint_cells(ctx: EnvContext, spawn_cell, radius: float = VIEW_DISTANCE):
    """Free cells within `radius` of the target, ordered by geodesic distance from the spawn."""
    from .geodesic import distance_field

    free = main_free_region(ctx.occ)
    from_spawn = distance_field(free, [spawn_cell])
    tx, ty = ctx.scene.rest_pose.xy
    ii, jj = np.nonzero(free & np.isfinite(from_spawn))
    d = np.hypot((ii + 0.5) * CELL - tx, (jj + 0.5) * CELL - ty)
    keep = d <= radius
    cells = sorted(zip(from_spawn[ii[keep], jj[keep]].tolist(), d[keep].tolist(), ii[keep].tolist(), jj[keep].tolist()))
    return [(i, j) for _, _, i, j in cells]


def expert_trajectory(scene: SceneInstance, ctx: EnvContext | None = None) -> list:
    """Shortest static-map route to a viewpoint near the target, view adjustment, then Found.

    Candidate viewpoints are tried nearest-first; the plan is only returned once
    its replay through the environment succeeds. Raises NoPathError otherwise.
    """
    ctx = EnvContext(scene) if ctx is None else ctx
    spawn = scene.agent_spawn
    start = cell_of(*spawn.xy)
    full = OccupancyMap(ctx.occ.copy(), np.ones_like(ctx.occ), np.zeros(ctx.occ.shape, np.int16))
    tried = 0
    for vp in viewpoint_cells(ctx, start):
        vx, vy = cell_center(*vp)
        probe = Pose((vx, vy, 0.0), 0.0, 0.0)
        facing = math.degrees(math.atan2(scene.rest_pose.xy[1] - vy, scene.rest_pose.xy[0] - vx))
        probe = Pose((vx, vy, 0.0), float(round(facing) % 360), 0.0)
        if not any(target_visible(ctx, Pose(probe.position, probe.yaw, p)) for p in EXPERT_PITCHES):
            continue
        tried += 1
        if tried > MAX_VIEWPOINTS:
            break
        try:
            path = astar(full, start, vp)
        except NoPathError:
            continue
        driven = _drive(ctx, spawn, path, 160)
        if driven is None:
            continue
        actions, pose = driven
        if math.dist(pose.xy, scene.rest_pose.xy) >= 1.95:
            continue
        view = _finish_view(ctx, pose, scene.rest_pose.xy)
        if view is None:
            continue
        actions = actions + view[0]
        state, _ = run_actions(scene, actions, ctx)
        if state.done and state.outcome.success:
            return actions
    raise NoPathError("no viewpoint of the target is reachable")


# -- generation -----------------------------------------------------------------

def _spawn(ctx: EnvContext, rest_xy, rng) -> Pose:
    free = main_free_region(ctx.occ)
    ii, jj = np.nonzero(free)
    cx, cy = (ii + 0.5) * CELL, (jj + 0.5) * CELL
    ok = (np.hypot(cx - rest_xy[0], cy - rest_xy[1]) >= SPAWN_MIN_DISTANCE) & np.isfinite(ctx.field[ii, jj])
    if not ok.any():
        raise NoPathError("no free spawn cell at least 1.5 m from the target")
    k = int(rng.choice(np.flatnonzero(ok)))
    return Pose((float(cx[k]), float(cy[k]), 0.0), float(rng.integers(0, 360)), 0.0)


def generate_episode(record: FallRecord, variant: RoomVariant, seed: int, n_distractors: int | None = None,
                     out_dir=None, episode_id: str | None = None) -> Episode:
    rng = np.random.default_rng([seed & 0xFFFFFFFF, seed >> 32, 53])
    zone = variant.fall_zones[record.zone_id]
    n = int(rng.integers(1, 4)) if n_distractors is None else n_distractors
    distractors, _ = place_distractors(zone, record.target, n, seed & 0xFFFFFFFF, record.rest_pose.position)
    occ, _ = _room_cache(variant)
    # provisional scene to reuse the context machinery for spawn sampling
    provisional = SceneInstance(variant, record.target, record.fall_init, record.rest_pose, tuple(distractors),
                                Pose((0.05, 0.05, 0.0)), seed, record.zone_id, record.impacts)
    ctx = EnvContext(provisional)
    spawn = _spawn(ctx, record.rest_pose.xy, rng)
    scene = SceneInstance(variant, record.target, record.fall_init, record.rest_pose, tuple(distractors),
                          spawn, seed, record.zone_id, record.impacts)
    scene.check()
    ctx.scene = scene
    expert = expert_trajectory(scene, ctx)
    l = ctx.geodesic(spawn)
    audio = episode_audio(scene)
    ep = Episode(scene, audio, expert, l, episode_id=episode_id or f"ep{seed:x}")
    if out_dir is not None:
        write_episode(ep, out_dir)
    return ep


def write_episode(ep: Episode, out_dir) -> dict:
    out = Path(out_dir)
    for sub in ("scenes", "audio", "trajectories"):
        (out / sub).mkdir(parents=True, exist_ok=True)
    scene_rel = f"scenes/{ep.episode_id}.scene"
    audio_rel = f"audio/{ep.episode_id}.wav"
    traj_rel = f"trajectories/{ep.episode_id}.log"
    save_scene(ep.scene, out / scene_rel)
    write_wav(ep.audio, out / audio_rel)
    _, records = run_actions(ep.scene, ep.expert)
    write_log(records, out / traj_rel)
    ep.audio_path = audio_rel
    return {"scene": scene_rel, "audio": audio_rel, "trajectory": traj_rel}


def episode_seed(master_seed: int, index: int, attempt: int = 0) -> int:
    ss = np.random.SeedSequence([master_seed, index, attempt])
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def assign_splits(n: int, sizes, seed: int) -> list[str]:
    perm = np.random.default_rng([seed, 7]).permutation(n)
    labels = [""] * n
    bounds = np.cumsum([0, *sizes])
    for s, name in enumerate(SPLITS):
        for k in perm[bounds[s]:bounds[s + 1]]:
            labels[int(k)] = name
    return labels


def cross_scene_splits(room_types, train_type: str, test_type: str, seed: int, val_fraction: float = 0.15):
    """Train/val drawn from one room type, test from the other; other episodes unused (None)."""
    idx_train = [i for i, t in enumerate(room_types) if t == train_type]
    perm = np.random.default_rng([seed, 11]).permutation(len(idx_train))
    n_val = int(round(val_fraction * len(idx_train)))
    labels = [None] * len(room_types)
    for rank, k in enumerate(perm):
        labels[idx_train[int(k)]] = "val" if rank < n_val else "train"
    for i, t in enumerate(room_types):
        if t == test_type:
            labels[i] = "test"
    return labels


def build_dataset(cfg: DatasetConfig, out_dir) -> Path:
    """Generate `cfg.n_instances` episodes with balanced categories and write manifests.

    Returns the path of the in-scene manifest; cross-scene manifests sit beside it.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rooms = list(cfg.rooms) if cfg.rooms is not None else standard_variants(cfg.master_seed)
    order = np.random.default_rng([cfg.master_seed, 3]).permutation(len(rooms))
    entries, rejections = [], Counter()
    trials = kept = 0
    for i in range(cfg.n_instances):
        cat = CATEGORIES[i % len(CATEGORIES)].id
        done = False
        for attempt in range(cfg.attempts_per_instance * len(rooms)):
            room = rooms[int(order[(i + attempt) % len(rooms)])]
            seed = episode_seed(cfg.master_seed, i, attempt)
            records, rej = rehearse(room, cfg.trials_per_attempt, seed, categories=[cat])
            trials += cfg.trials_per_attempt
            kept += len(records)
            rejections.update(rej)
            usable = [r for r in records if r.visibility > 0]
            rejections["never_visible"] += len(records) - len(usable)
            for rec in usable[:3]:
                try:
                    ep = generate_episode(rec, room, seed, episode_id=f"{i:05d}")
                except NoPathError as e:
                    rejections["no_expert"] += 1
                    log.debug("episode %d attempt %d: %s", i, attempt, e)
                    continue
                paths = write_episode(ep, out)
                entries.append({"id": ep.episode_id, **paths, "l": ep.l, "n_star": ep.n_star,
                                "category": cat, "room_id": room.id, "room_type": room.room_type,
                                "impacts": ep.impact_count})
                done = True
                break
            if done:
                break
            if attempt + 1 >= cfg.attempts_per_instance:
                break
        if not done:
            raise RuntimeError(f"instance {i}: no usable episode after retries "
                               f"(keep rate {kept / max(trials, 1):.3f})")
    stats = {"rehearsal_trials": trials, "kept": kept, "keep_rate": kept / max(trials, 1),
             "rejections": dict(sorted(rejections.items()))}
    splits = assign_splits(len(entries), cfg.split_sizes(), cfg.master_seed)
    manifest = write_manifest(out / "manifest.json", entries, splits, cfg, "in_scene", stats)
    types = [e["room_type"] for e in entries]
    for name in cfg.cross_scene:
        tr, te = CROSS_SCENES[name]
        labels = cross_scene_splits(types, tr, te, cfg.master_seed)
        write_manifest(out / f"manifest_{tr}_to_{te}.json", entries, labels, cfg, name, stats)
    return manifest


def write_manifest(path, entries, splits, cfg: DatasetConfig, scheme: str, stats: dict) -> Path:
    eps = [{**e, "split": s} for e, s in zip(entries, splits) if s is not None]
    doc = {"schema_version": MANIFEST_VERSION, "master_seed": cfg.master_seed, "n_instances": cfg.n_instances,
           "split_scheme": scheme, "generation": stats, "episodes": eps}
    path = Path(path)
    path.write_text(json.dumps(doc, indent=1) + "\n")
    return path


def load_manifest(path) -> dict:
    path = Path(path)
    doc = json.loads(path.read_text())
    if doc.get("schema_version") != MANIFEST_VERSION:
        raise ValueError(f"{path}: unsupported manifest version")
    doc["root"] = str(path.parent)
    return doc
