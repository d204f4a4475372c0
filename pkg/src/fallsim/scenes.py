"""Scene instances (room + fall event + distractors + spawn) and their JSON files."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

from .physics import FallInit, ImpactEvent
from .world import (
    ObjectSpec,
    Pose,
    RoomVariant,
    WorldError,
    build_room_variant,
    cell_of,
    object_box,
    static_occupancy,
)

SCHEMA_VERSION = 1


class SceneError(WorldError):
    pass


@dataclass(frozen=True)
class SceneInstance:
    room: RoomVariant
    target: ObjectSpec
    fall_init: FallInit
    rest_pose: Pose
    distractors: tuple[tuple[ObjectSpec, Pose], ...]
    agent_spawn: Pose
    seed: int
    zone_id: int
    impacts: tuple[ImpactEvent, ...] = ()

    @property
    def zone(self):
        return self.room.fall_zones[self.zone_id]

    def check(self) -> None:
        occ = static_occupancy(self.room)
        ix, iy = cell_of(*self.agent_spawn.xy)
        nx, ny = occ.shape
        if not (0 <= ix < nx and 0 <= iy < ny) or occ[ix, iy]:
            raise SceneError("agent spawn is not in free space")
        if not self.zone.region.contains(self.rest_pose.position, tol=1e-6):
            raise SceneError(f"rest pose outside fall zone {self.zone_id}")
        boxes = [object_box(self.target, self.rest_pose.position)]
        for obj, pose in self.distractors:
            box = object_box(obj, pose.position)
            if any(box.intersects_xy(b, 0.0) for b in boxes):
                raise SceneError("distractors collide")
            if math.dist(pose.xy, self.rest_pose.xy) < 0.1:
                raise SceneError("distractor too close to the target")
            boxes.append(box)


def _pose(p: Pose) -> dict:
    return {"position": list(p.position), "yaw": p.yaw, "pitch": p.pitch}


def _obj(o: ObjectSpec) -> dict:
    return {"category": o.category, "material": o.material, "mass": o.mass,
            "restitution": o.restitution, "friction": o.friction, "extent": list(o.extent)}


def scene_to_dict(scene: SceneInstance) -> dict:
    r = scene.room
    return {
        "schema_version": SCHEMA_VERSION,
        "room": {"id": r.id, "room_type": r.room_type, "layout_id": r.layout_id,
                 "wall_material": r.wall_material, "floor_material": r.floor_material, "seed": r.seed},
        "target": _obj(scene.target),
        "fall_init": {"pose": _pose(scene.fall_init.pose), "velocity": list(scene.fall_init.velocity),
                      "angular_velocity": list(scene.fall_init.angular_velocity)},
        "rest_pose": _pose(scene.rest_pose),
        "distractors": [{"object": _obj(o), "pose": _pose(p)} for o, p in scene.distractors],
        "agent_spawn": _pose(scene.agent_spawn),
        "seed": scene.seed,
        "zone_id": scene.zone_id,
        "impacts": [{"time": e.time, "position": list(e.position), "normal_speed": e.normal_speed,
                     "surface_material": e.surface_material, "object_material": e.object_material,
                     "object_mass": e.object_mass,
                     "surface_mass": None if math.isinf(e.surface_mass) else e.surface_mass}
                    for e in scene.impacts],
    }


def _to_pose(d) -> Pose:
    return Pose(tuple(float(c) for c in d["position"]), float(d["yaw"]), float(d["pitch"]))


def _to_obj(d) -> ObjectSpec:
    return ObjectSpec(d["category"], d["material"], float(d["mass"]), float(d["restitution"]),
                      float(d["friction"]), tuple(float(c) for c in d["extent"]))


def scene_from_dict(d: dict) -> SceneInstance:
    if d.get("schema_version") != SCHEMA_VERSION:
        raise SceneError(f"schema_version {d.get('schema_version')!r} != {SCHEMA_VERSION}")
    try:
        rd = d["room"]
        room = build_room_variant(rd["room_type"], rd["layout_id"], rd["wall_material"],
                                  rd["floor_material"], rd["seed"])
        if room.id != rd["id"]:
            raise SceneError(f"room id mismatch: {room.id} vs {rd['id']}")
        fi = d["fall_init"]
        impacts = tuple(
            ImpactEvent(float(e["time"]), tuple(float(c) for c in e["position"]), float(e["normal_speed"]),
                        e["surface_material"], e["object_material"], float(e["object_mass"]),
                        math.inf if e["surface_mass"] is None else float(e["surface_mass"]))
            for e in d["impacts"])
        scene = SceneInstance(
            room=room,
            target=_to_obj(d["target"]),
            fall_init=FallInit(_to_pose(fi["pose"]), tuple(map(float, fi["velocity"])),
                               tuple(map(float, fi["angular_velocity"]))),
            rest_pose=_to_pose(d["rest_pose"]),
            distractors=tuple((_to_obj(x["object"]), _to_pose(x["pose"])) for x in d["distractors"]),
            agent_spawn=_to_pose(d["agent_spawn"]),
            seed=int(d["seed"]),
            zone_id=int(d["zone_id"]),
            impacts=impacts,
        )
    except (KeyError, TypeError, IndexError) as e:
        raise SceneError(f"malformed scene: {e!r}") from e
    scene.check()
    return scene


def save_scene(scene: SceneInstance, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(scene_to_dict(scene), indent=1) + "\n")
    return path


def load_scene(path) -> SceneInstance:
    try:
        d = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise SceneError(f"{path}: parse error: {e}") from e
    return scene_from_dict(d)
