"""Metrics (success, SPL, SNA), benchmark runner, oracle ablations and trajectory images."""
from __future__ import annotations

import hashlib
import json
import math
from collections import defaultdict
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .audio import read_wav, room_acoustics
from .env import MAX_STEPS, AgentAction, EnvContext, log_record, reset, step, write_log
from .perception import GoalEstimate, SegNoiseModel, audio_goal, default_library
from .policy import OracleFlags, RandomAgent, Truth, init_planner, modular_policy_step
from .scenes import load_scene
from .world import CELL, static_occupancy


class EvalError(ValueError):
    pass


@dataclass(frozen=True)
class EpisodeResult:
    episode_id: str
    success: int
    l: float
    p: float
    n_star: int
    n: int
    fail_reason: str | None = None
    category: str = ""
    room_id: str = ""
    collisions: int = 0

    def __post_init__(self):
        if self.p < 0 or self.n > MAX_STEPS:
            raise EvalError("invalid episode result")
        if self.success and self.fail_reason is not None:
            raise EvalError("successful episode cannot carry a fail reason")


def _check(results):
    if not results:
        raise EvalError("empty result set")


def success_rate(results) -> float:
    _check(results)
    return sum(r.success for r in results) / len(results)


def spl(results) -> float:
    """Mean of S * l / max(p, l)."""
    _check(results)
    if any(r.l <= 0 for r in results):
        raise EvalError("shortest path length must be positive")
    return sum(r.success * r.l / max(r.p, r.l) for r in results) / len(results)


def sna(results) -> float:
    """Mean of S * n* / max(n, n*)."""
    _check(results)
    if any(r.n_star <= 0 for r in results):
        raise EvalError("expert action count must be positive")
    return sum(r.success * r.n_star / max(r.n, r.n_star) for r in results) / len(results)


@dataclass(frozen=True)
class BenchmarkReport:
    agent: str
    split: str
    n_episodes: int
    success_rate: float
    spl: float
    sna: float
    per_category: dict
    per_room: dict
    fingerprint: str
    results: tuple[EpisodeResult, ...] = field(repr=False, default=())

    def summary(self) -> dict:
        return {"agent": self.agent, "split": self.split, "episodes": self.n_episodes,
                "success_rate": self.success_rate, "spl": self.spl, "sna": self.sna,
                "fingerprint": self.fingerprint}


def _breakdown(results, key):
    groups = defaultdict(list)
    for r in results:
        groups[getattr(r, key)].append(r)
    return {k: {"n": len(v), "success_rate": success_rate(v), "spl": spl(v), "sna": sna(v)}
            for k, v in sorted(groups.items())}


def make_report(agent: str, split: str, results, config: dict | None = None) -> BenchmarkReport:
    results = tuple(results)
    payload = json.dumps({"agent": agent, "split": split, "config": config or {},
                          "results": [asdict(r) for r in results]}, sort_keys=True)
    fp = hashlib.sha256(payload.encode()).hexdigest()[:16]
    return BenchmarkReport(agent, split, len(results), success_rate(results), spl(results), sna(results),
                           _breakdown(results, "category"), _breakdown(results, "room_id"), fp, results)


# -- agents ------------------------------------------------------------------------

@dataclass(frozen=True)
class AgentSpec:
    kind: str  # modular | random | greedy-audio
    flags: OracleFlags = OracleFlags()
    seed: int = 0

    @classmethod
    def parse(cls, text: str, oracles=(), seed: int = 0) -> AgentSpec:
        """'modular', 'random', 'greedy-audio', or 'modular+seg+object' style strings."""
        kind, *extra = text.split("+")
        if kind not in ("modular", "random", "greedy-audio"):
            raise EvalError(f"unknown agent {kind!r}")
        flags = OracleFlags.parse([*extra, *(oracles or ())])
        if kind != "modular" and flags != OracleFlags():
            raise EvalError("oracle flags apply to the modular agent only")
        return cls(kind, flags, seed)

    @property
    def label(self) -> str:
        return self.kind if self.kind != "modular" or self.flags == OracleFlags() else f"modular+{self.flags.label}"


class PerceptionCache:
    """Step-0 audio estimates per episode, shared across runs on the same manifest."""

    def __init__(self, library=None):
        self.library = library
        self.goals: dict[str, GoalEstimate] = {}

    def goal(self, key, clip, scene) -> GoalEstimate:
        if key not in self.goals:
            lib = default_library() if self.library is None else self.library
            self.goals[key] = audio_goal(clip, scene.agent_spawn, room_acoustics(scene.room), lib)
        return self.goals[key]


def run_episode(scene, clip, agent: AgentSpec, goal: GoalEstimate | None = None, resolution: int = 128,
                episode_id: str = "", n_star: int = 1, l: float | None = None, log_path=None):
    """Run one agent to termination; returns (EpisodeResult, log records, planner or None)."""
    ctx = EnvContext(scene, resolution)
    state, obs = reset(scene, resolution, audio=clip, ctx=ctx)
    planner = None
    rand = None
    if agent.kind == "random":
        rand = RandomAgent(agent.seed * 1_000_003 + scene.seed)
    else:
        truth = Truth(scene.target.category, scene.rest_pose.xy)
        planner = init_planner(goal, scene.room.dims, agent.flags, truth,
                               SegNoiseModel.default(seed=scene.seed ^ agent.seed))
    records = []
    done = False
    while not done:
        if rand is not None:
            action = rand.act(obs)
        elif agent.kind == "greedy-audio":
            action = _greedy_audio(planner, obs)
        else:
            action = modular_policy_step(planner, obs)
        state, obs, reward, done = step(state, action)
        records.append(log_record(state, action, reward))
    if log_path is not None:
        write_log(records, log_path)
    l = ctx.geodesic(scene.agent_spawn) if l is None else l
    out = state.outcome
    result = EpisodeResult(episode_id, int(out.success), float(l), float(state.path_traveled), int(n_star),
                           int(state.step_index), None if out.success else out.reason,
                           scene.target.category, scene.room.id, state.collisions)
    return result, records, planner


def _greedy_audio(planner, obs):
    """Walk to the audio goal and declare there."""
    from .policy import _decide

    if planner.phase not in ("GoToAudioGoal",):
        return AgentAction.Found
    a = _decide(planner, obs)
    if planner.phase != "GoToAudioGoal" and a != AgentAction.Found:
        return AgentAction.Found
    return a


def manifest_episodes(manifest: dict, split: str | None, episodes: int | None = None):
    eps = [e for e in manifest["episodes"] if split is None or e["split"] == split]
    if episodes is not None:
        eps = eps[:episodes]
    return eps


def run_benchmark(agent, manifest: dict, split: str | None = "test", episodes: int | None = None,
                  resolution: int = 128, cache: PerceptionCache | None = None, log_dir=None,
                  seed: int = 0) -> BenchmarkReport:
    """Run an agent over the manifest's split and aggregate metrics."""
    spec = agent if isinstance(agent, AgentSpec) else AgentSpec.parse(agent, seed=seed)
    cache = PerceptionCache() if cache is None else cache
    root = Path(manifest["root"])
    results = []
    for e in manifest_episodes(manifest, split, episodes):
        scene_path, audio_path = root / e["scene"], root / e["audio"]
        if not scene_path.exists() or not audio_path.exists():
            raise EvalError(f"missing asset for episode {e['id']}")
        scene = load_scene(scene_path)
        clip = read_wav(audio_path)
        goal = None if spec.kind == "random" else cache.goal(e["id"], clip, scene)
        log_path = None if log_dir is None else Path(log_dir) / f"{spec.label}_{e['id']}.log"
        r, _, _ = run_episode(scene, clip, spec, goal, resolution, e["id"], e["n_star"], e["l"], log_path)
        results.append(r)
    config = {"resolution": resolution, "seed": spec.seed, "episodes": [e["id"] for e in manifest_episodes(manifest, split, episodes)]}
    return make_report(spec.label, split or "all", results, config)


ABLATION_ROWS = (
    ("Random", "random", ()),
    ("Modular Planning", "modular", ()),
    ("Modular Planning (GT seg.)", "modular", ("seg",)),
    ("Modular Planning (GT object)", "modular", ("object",)),
    ("Modular Planning (GT seg.+ object)", "modular", ("seg", "object")),
    ("Modular Planning (GT seg.+ object + location)", "modular", ("seg", "object", "location")),
)


def ablation_suite(manifest: dict, split: str | None = None, episodes: int | None = None,
                   resolution: int = 128, seed: int = 0):
    """Random baseline plus the modular agent under each oracle swap, in table order."""
    cache = PerceptionCache()
    rows = []
    for name, kind, flags in ABLATION_ROWS:
        spec = AgentSpec(kind, OracleFlags.parse(flags), seed)
        rows.append((name, run_benchmark(spec, manifest, split, episodes, resolution, cache, seed=seed)))
    return rows


def format_table(rows) -> str:
    lines = [f"{'Method':<48} {'Success':>8} {'SPL':>8} {'SNA':>8}"]
    for name, rep in rows:
        lines.append(f"{name:<48} {rep.success_rate:>8.3f} {rep.spl:>8.3f} {rep.sna:>8.3f}")
    return "\n".join(lines)


# -- visualization ------------------------------------------------------------------

COLORS = {"free": (235, 235, 235), "occupied": (90, 90, 90), "success": (30, 160, 60), "fail": (200, 40, 40),
          "spawn": (40, 90, 220), "goal": (230, 190, 20), "target": (200, 40, 200)}


def _disk(img, cx, cy, radius, color):
    h, w, _ = img.shape
    for y in range(max(0, cy - radius), min(h, cy + radius + 1)):
        for x in range(max(0, cx - radius), min(w, cx + radius + 1)):
            if (x - cx) ** 2 + (y - cy) ** 2 <= radius * radius:
                img[y, x] = color


def trajectory_image(scene, records, goal_xy=None, scale: int = 4, success: bool | None = None) -> np.ndarray:
    """Top-down RGB raster, x to the right and y upward; one map cell = `scale` pixels."""
    occ = static_occupancy(scene.room)
    nx, ny = occ.shape
    img = np.empty((ny * scale, nx * scale, 3), dtype=np.uint8)
    cells = np.where(occ.T[::-1, :, None], COLORS["occupied"], COLORS["free"]).astype(np.uint8)
    img[:] = np.repeat(np.repeat(cells, scale, axis=0), scale, axis=1)

    def px(x, y):
        return int(x / CELL * scale), int((ny * CELL - y) / CELL * scale)

    try:
        pts = [scene.agent_spawn.xy] + [(r["pose"][0], r["pose"][1]) for r in records]
    except (KeyError, IndexError, TypeError) as e:
        raise EvalError(f"corrupt trajectory log: {e!r}") from e
    if success is None:
        success = bool(records) and records[-1]["action"] == AgentAction.Found.value and records[-1]["reward"] > 5
    color = COLORS["success" if success else "fail"]
    for (x0, y0), (x1, y1) in zip(pts, pts[1:]):
        n = max(1, int(math.dist((x0, y0), (x1, y1)) / CELL * scale * 2))
        for k in range(n + 1):
            t = k / n
            u, v = px(x0 + t * (x1 - x0), y0 + t * (y1 - y0))
            if 0 <= v < img.shape[0] and 0 <= u < img.shape[1]:
                img[v, u] = color
    _disk(img, *px(*scene.agent_spawn.xy), max(1, scale), COLORS["spawn"])
    if goal_xy is not None:
        _disk(img, *px(*goal_xy), max(1, scale), COLORS["goal"])
    _disk(img, *px(*scene.rest_pose.xy), max(1, scale), COLORS["target"])
    return img


def write_ppm(img: np.ndarray, path) -> Path:
    path = Path(path)
    h, w, _ = img.shape
    with path.open("wb") as f:
        f.write(f"P6\n{w} {h}\n255\n".encode())
        f.write(np.ascontiguousarray(img, dtype=np.uint8).tobytes())
    return path


def read_ppm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    parts = data.split(maxsplit=4)
    if parts[0] != b"P6":
        raise EvalError("not a binary PPM")
    w, h = int(parts[1]), int(parts[2])
    return np.frombuffer(parts[4][:w * h * 3], dtype=np.uint8).reshape(h, w, 3)


def visualize_trajectory(scene, records, path, goal_xy=None, scale: int = 4) -> Path:
    return write_ppm(trajectory_image(scene, records, goal_xy, scale), path)

