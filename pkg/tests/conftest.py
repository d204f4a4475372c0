import heapq
import math
import os
from pathlib import Path

import numpy as np
import pytest

from fallsim.world import Box, FallZone, Furnishing, RoomVariant


def make_room(dims=(4.0, 4.0, 2.7), furnishings=(), zones=None, wall="stone", floor="wood_hard",
              room_type="kitchen", room_id="fixture"):
    """Hand-built room; by default 20 copies of a floor zone covering the whole floor."""
    W, D, _ = dims
    if zones is None:
        region = Box((W / 2, D / 2, 0.05), (W / 2 - 0.2, D / 2 - 0.2, 0.05))
        zones = tuple(FallZone(i, "floor", region, 0.0) for i in range(20))
    return RoomVariant(room_type, dims, wall, floor, 0, 0, tuple(furnishings), tuple(zones), room_id)


def box_furnishing(lo, hi, **kw):
    return Furnishing(kw.pop("label", "cabinet"), Box.from_bounds(lo, hi), **kw)


def make_scene(room=None, target="cup", rest_xy=(3.0, 2.0), spawn=((1.0, 2.0), 0.0), distractors=(),
               seed=5, impacts=None):
    """Scene with the target resting on the floor at `rest_xy` and the agent at `spawn` (xy, yaw)."""
    from fallsim.physics import FallInit, ImpactEvent
    from fallsim.scenes import SceneInstance
    from fallsim.world import ObjectSpec, Pose

    room = make_room() if room is None else room
    obj = ObjectSpec.default(target)
    rest = Pose((rest_xy[0], rest_xy[1], obj.radius))
    if impacts is None:
        impacts = (ImpactEvent(0.05, rest.position, 3.0, room.floor_material, obj.material, obj.mass),)
    init = FallInit(Pose((rest_xy[0], rest_xy[1], 0.8)))
    (sx, sy), yaw = spawn
    return SceneInstance(room, obj, init, rest, tuple(distractors), Pose((sx, sy, 0.0), yaw), seed, 0,
                         tuple(impacts))


@pytest.fixture
def empty_room():
    return make_room()


@pytest.fixture(scope="session")
def dataset200(tmp_path_factory):
    """The 200-episode desk benchmark built once per session; returns (manifest, build seconds).

    Set FALLSIM_TEST_DATA to keep the build across sessions (build time is then None on reuse).
    """
    import time

    from fallsim.datasetgen import DatasetConfig, build_dataset, load_manifest

    keep = os.environ.get("FALLSIM_TEST_DATA")
    out = Path(keep) / "ds200" if keep else tmp_path_factory.mktemp("ds200")
    manifest = out / "manifest.json"
    elapsed = None
    if not manifest.exists():
        t0 = time.perf_counter()
        build_dataset(DatasetConfig(n_instances=200, master_seed=0), out)
        elapsed = time.perf_counter() - t0
    return load_manifest(manifest), elapsed


@pytest.fixture(scope="session")
def small_dataset(tmp_path_factory):
    from fallsim.datasetgen import DatasetConfig, build_dataset, load_manifest

    out = tmp_path_factory.mktemp("ds8")
    path = build_dataset(DatasetConfig(n_instances=8, master_seed=3), out)
    return load_manifest(path)


def dijkstra_oracle(passable, src, weight=None):
    """Plain heap Dijkstra on the 8-connected grid without corner cutting (cost in cells)."""
    nx, ny = passable.shape
    dist = np.full(passable.shape, np.inf)
    dist[src] = 0.0
    heap = [(0.0, src)]
    while heap:
        d, (i, j) = heapq.heappop(heap)
        if d > dist[i, j]:
            continue
        for di in (-1, 0, 1):
            for dj in (-1, 0, 1):
                a, b = i + di, j + dj
                if (di or dj) and 0 <= a < nx and 0 <= b < ny and passable[a, b]:
                    if di and dj and not (passable[i + di, j] and passable[i, j + dj]):
                        continue
                    w = 1.0 if weight is None else 0.5 * (weight[i, j] + weight[a, b])
                    nd = d + math.hypot(di, dj) * w
                    if nd < dist[a, b]:
                        dist[a, b] = nd
                        heapq.heappush(heap, (nd, (a, b)))
    return dist


def pytest_terminal_summary(terminalreporter):
    import sys

    lines = getattr(sys.modules.get("test_acceptance"), "RESULTS", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
