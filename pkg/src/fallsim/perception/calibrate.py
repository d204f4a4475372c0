"""Synthetic calibration sets for the range estimator."""
from __future__ import annotations

import json
import math
from dataclasses import replace
from pathlib import Path

import numpy as np

from ..audio import object_mode_bank, render_episode_audio, room_acoustics
from ..physics import G, ImpactEvent
from ..world import CATEGORIES, ObjectSpec, Pose, cell_center, main_free_region, standard_variants, static_occupancy
from .classify import classify_sound, default_library
from .localize import distance_features, estimate_distance, fit_distance, free_field_features

CALIBRATION_VERSION = 2


def impact_series(obj: ObjectSpec, position, height: float, surface: str, t0: float = 0.05,
                  restitution: float = 0.45):
    """Bounce train of a vertical drop: speeds e^n v0 at ballistic intervals."""
    v = math.sqrt(2 * G * height)
    t = t0
    out = []
    while v >= 0.3 and len(out) < 6:
        out.append(ImpactEvent(round(t, 9), tuple(position), v, surface, obj.material, obj.mass))
        v2 = v * restitution
        t += 2 * v2 / G
        v = v2
    return out


def sample_case(rng, rooms, reverb: bool = True, max_range: float = 5.0):
    """One randomized impact heard from a random free cell: (clip, acoustics, horizontal range, room)."""
    room = rooms[int(rng.integers(len(rooms)))]
    free = main_free_region(static_occupancy(room))
    ii, jj = np.nonzero(free)
    k = int(rng.integers(len(ii)))
    x, y = cell_center(ii[k], jj[k])
    listener = Pose((x, y, 0.0), float(rng.integers(0, 12) * 30), 0.0)
    w, d, _ = room.dims
    while True:
        sx, sy = rng.uniform(0.1, w - 0.1), rng.uniform(0.1, d - 0.1)
        rng_h = math.hypot(sx - x, sy - y)
        if 0.4 <= rng_h <= max_range:
            break
    cat = CATEGORIES[int(rng.integers(len(CATEGORIES)))]
    obj = ObjectSpec.default(cat.id, float(rng.uniform(0.8, 1.2)))
    z = float(rng.choice([0.0, 0.45, 0.75, 0.9])) + obj.radius
    impacts = impact_series(obj, (sx, sy, z), float(rng.uniform(0.3, 1.0)), room.floor_material)
    acoustics = room_acoustics(room)
    if not reverb:
        acoustics = replace(acoustics, reverberant=False)
    clip = render_episode_audio(impacts, room, listener, object_mode_bank(obj, int(rng.integers(1 << 31))),
                                acoustics=acoustics, reverb=reverb)
    return clip, acoustics, rng_h, room


def calibration_cases(n: int, seed: int, reverb: bool = True):
    rng = np.random.default_rng([seed, 17])
    rooms = standard_variants()
    return [sample_case(rng, rooms, reverb) for _ in range(n)]


def _holdout_error(cases, coef) -> float:
    rel = [abs(estimate_distance(c, a, coef) - r) / r for c, a, r, _ in cases]
    return float(np.median(rel))


def calibrate_distance(n: int = 500, seed: int = 0, holdout: int = 100) -> dict:
    """Fit the reverberant (RMS, DRR) model and the free-field (peak, source prior) model."""
    cases = calibration_cases(n, seed)
    coef = fit_distance([distance_features(c) for c, *_ in cases], [r for _, _, r, _ in cases])
    lib = default_library()
    dry = calibration_cases(n, seed + 2, reverb=False)
    ff = fit_distance([free_field_features(c, a, classify_sound(c, lib)) for c, a, _, _ in dry],
                      [r for _, _, r, _ in dry])
    return {"version": CALIBRATION_VERSION, "features": ["rms_db", "drr_db"], "target": "log horizontal range (m)",
            "n_calibration": n, "seed": seed, "coefficients": coef,
            "holdout_median_relative_error": _holdout_error(calibration_cases(holdout, seed + 1), coef),
            "free_field": {"features": ["peak_db", "log_mass", "log_band_lo", "floor_soft"], "coefficients": ff,
                           "holdout_median_relative_error":
                               _holdout_error(calibration_cases(holdout, seed + 3, reverb=False), ff)}}


def write_calibration(path, **kw) -> Path:
    path = Path(path)
    path.write_text(json.dumps(calibrate_distance(**kw), indent=1) + "\n")
    return path
