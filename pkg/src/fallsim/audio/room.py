from __future__ import annotations

from dataclasses import dataclass

from ..world import RoomVariant, material

RT60_MIN, RT60_MAX = 0.05, 3.0
SABINE = 0.161


@dataclass(frozen=True)
class RoomAcoustics:
    rt60: float
    direct_gain_ref: float
    volume: float
    total_absorption: float
    diagonal: float
    floor_soft: bool = False
    reverberant: bool = True  # False for a free-field (dry) listening condition


def sabine_rt60(volume: float, absorption: float) -> float:
    return SABINE * volume / absorption


def room_acoustics(room: RoomVariant) -> RoomAcoustics:
    """Sabine reverberation time from room size and wall/floor/ceiling absorption.

    The ceiling shares the wall material.
    """
    w, d, h = room.dims
    wall = material(room.wall_material).absorption
    floor = material(room.floor_material).absorption
    absorption = 2 * (w + d) * h * wall + w * d * floor + w * d * wall
    volume = w * d * h
    rt60 = min(max(sabine_rt60(volume, absorption), RT60_MIN), RT60_MAX)
    return RoomAcoustics(rt60, 1.0, volume, absorption, room.diagonal, material(room.floor_material).soft)
