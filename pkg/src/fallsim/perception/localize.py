"""Binaural localization: GCC-PHAT ITD, Woodworth inversion, level/DRR ranging."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

import numpy as np

from ..audio.binaural import HEAD_RADIUS, SPEED_OF_SOUND, woodworth_itd

ITD_WINDOW = 0.100
ITD_CLAMP = 0.8e-3
PRECEDENCE_TAU = 0.020
ONSET_DB = -40.0
DIRECT_WINDOW = 0.010
PRE_ROLL = 0.002
MAX_ITD = HEAD_RADIUS / SPEED_OF_SOUND * (math.pi / 2 + 1)
MIN_DISTANCE = 0.3
ITD_SLACK = 0.01  # relative; rounding in reported ITDs near the lateral maximum


class PerceptionError(ValueError):
    pass


@dataclass(frozen=True)
class GoalEstimate:
    position: tuple[float, float]
    bearing: float  # degrees, left positive
    distance: float
    category_ranking: tuple[tuple[str, float], ...]

    @property
    def top_categories(self):
        return [c for c, _ in self.category_ranking]


def onset_index(x: np.ndarray, level_db: float = ONSET_DB) -> int:
    """First sample within `level_db` of the clip peak (over both channels)."""
    env = np.abs(x).max(axis=1) if x.ndim == 2 else np.abs(x)
    peak = env.max() if len(env) else 0.0
    if peak <= 0:
        raise PerceptionError("clip is silent")
    return int(np.argmax(env >= peak * 10 ** (level_db / 20)))


def gcc_phat(a: np.ndarray, b: np.ndarray, max_lag: int) -> np.ndarray:
    """PHAT-weighted cross-correlation c[k] = sum a[n] b[n+k], k in [-max_lag, max_lag]."""
    n = 1 << int(math.ceil(math.log2(len(a) + len(b))))
    g = np.conj(np.fft.rfft(a, n)) * np.fft.rfft(b, n)
    mag = np.abs(g)
    g = g / np.maximum(mag, 1e-6 * mag.max() + 1e-300)
    cc = np.fft.irfft(g, n)
    return np.concatenate([cc[-max_lag:], cc[:max_lag + 1]])


def estimate_itd(clip, window: float = ITD_WINDOW, emphasis: float | None = PRECEDENCE_TAU) -> float:
    """Interaural delay in seconds; positive when the right channel lags.

    The analysis window is weighted by a decaying exponential from the onset
    so the direct sound outweighs later reverberation.
    """
    x = np.asarray(clip.samples, dtype=float)
    sr = clip.sample_rate
    start = max(0, onset_index(x) - int(PRE_ROLL * sr))
    seg = x[start:start + int(window * sr)]
    if emphasis is not None:
        seg = seg * np.exp(-np.arange(len(seg)) / (emphasis * sr))[:, None]
    max_lag = int(math.ceil(ITD_CLAMP * sr))
    cc = gcc_phat(seg[:, 0], seg[:, 1], max_lag)
    k = int(np.argmax(cc))
    frac = 0.0
    if 0 < k < len(cc) - 1:
        y0, y1, y2 = cc[k - 1], cc[k], cc[k + 1]
        den = y0 - 2 * y1 + y2
        if den < 0:
            frac = 0.5 * (y0 - y2) / den
    itd = round((k - max_lag + frac) / sr, 12)
    return min(max(itd, -ITD_CLAMP), ITD_CLAMP)


def bearing_from_itd(itd: float, tol_deg: float = 0.01) -> float:
    """Invert the Woodworth law by bisection; front hemisphere, left positive (degrees)."""
    if abs(itd) > MAX_ITD * (1 + ITD_SLACK):
        raise PerceptionError(f"ITD {itd * 1e3:.4f} ms exceeds the physical range")
    target = min(abs(itd), MAX_ITD)
    lo, hi = 0.0, 90.0
    while hi - lo > tol_deg / 4:
        mid = 0.5 * (lo + hi)
        if woodworth_itd(math.radians(mid)) < target:
            lo = mid
        else:
            hi = mid
    theta = 0.5 * (lo + hi)
    return math.copysign(theta, itd) if itd != 0 else 0.0


def distance_features(clip) -> tuple[float, float]:
    """(broadband RMS in dB, direct-to-reverberant ratio in dB: first 10 ms vs the rest)."""
    x = np.asarray(clip.samples, dtype=float)
    sr = clip.sample_rate
    i0 = max(0, onset_index(x) - int(PRE_ROLL * sr))
    e = np.sum(x ** 2, axis=1)
    rms_db = 10 * math.log10(float(e.mean()) + 1e-20)
    split = onset_index(x) + int(DIRECT_WINDOW * sr)
    direct = float(e[i0:split].sum())
    tail = float(e[split:].sum())
    drr_db = 10 * math.log10((direct + 1e-20) / (tail + 1e-20))
    return rms_db, drr_db


@lru_cache(maxsize=1)
def distance_calibration() -> dict:
    text = resources.files("fallsim.data").joinpath("distance_calibration.json").read_text()
    return json.loads(text)


def free_field_features(clip, acoustics, ranking) -> tuple[float, ...]:
    """(peak level in dB, log mass and log lowest mode band of the top-ranked category, soft floor).

    Without a reverberant tail the level alone confounds range with source strength, so the
    classifier's best guess supplies the source priors.
    """
    from ..world import category, material

    x = np.asarray(clip.samples, dtype=float)
    peak = float(np.abs(x).max()) / clip.scale
    cat = category(ranking[0][0])
    return (20 * math.log10(peak + 1e-20), math.log(cat.mass), math.log(material(cat.default_material).band[0]),
            float(acoustics.floor_soft))


def estimate_distance(clip, acoustics, coefficients=None, ranking=None) -> float:
    """Range (m) from a least-squares fit of log-distance on level features.

    Reverberant conditions use (RMS, DRR). Free-field conditions use the peak level and the
    category priors of ``ranking`` (classified on demand when omitted).
    """
    cal = distance_calibration()
    if acoustics.reverberant:
        c = cal["coefficients"] if coefficients is None else coefficients
        feats = distance_features(clip)
    else:
        c = cal["free_field"]["coefficients"] if coefficients is None else coefficients
        if ranking is None:
            from .classify import classify_sound, default_library

            ranking = classify_sound(clip, default_library())
        feats = free_field_features(clip, acoustics, ranking)
    d = math.exp(c[0] + sum(k * f for k, f in zip(c[1:], feats)))
    return min(max(d, MIN_DISTANCE), acoustics.diagonal)


def fit_distance(features, distances) -> list[float]:
    a = np.column_stack([np.ones(len(features)), np.asarray(features, dtype=float)])
    coef, *_ = np.linalg.lstsq(a, np.log(np.asarray(distances, dtype=float)), rcond=None)
    return [float(v) for v in coef]


def goal_position(pose, bearing_deg: float, distance: float) -> tuple[float, float]:
    a = math.radians(pose.yaw + bearing_deg)
    return (pose.position[0] + distance * math.cos(a), pose.position[1] + distance * math.sin(a))


def audio_goal(clip, agent_pose, acoustics, library=None) -> GoalEstimate:
    """Audio-only goal: bearing and range placed in the world frame, plus category ranking."""
    from .classify import classify_sound, default_library

    itd = max(-MAX_ITD, min(MAX_ITD, estimate_itd(clip)))
    bearing = bearing_from_itd(itd)
    ranking = classify_sound(clip, default_library() if library is None else library)
    dist = estimate_distance(clip, acoustics, ranking=ranking)
    return GoalEstimate(goal_position(agent_pose, bearing, dist), bearing, dist, tuple(ranking))
