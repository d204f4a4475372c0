"""Episode audio: per-impact synthesis, dry binaural path plus shared reverberant path."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from .binaural import FIR_HALF, SPEED_OF_SOUND, add_delayed, head_position, spatialize
from .modal import ModeBank, excitation_amplitude, mode_bank, synthesize_modes
from .reverb import schroeder_ir
from .room import RoomAcoustics, room_acoustics

SAMPLE_RATE = 44100
MIN_DURATION, MAX_DURATION = 0.5, 4.0
TRIM_LEVEL = 1e-3  # -60 dBFS
MIX_PER_METER = 0.25
MIX_RANGE = (0.05, 0.8)


@dataclass(frozen=True, eq=False)
class BinauralClip:
    samples: np.ndarray  # (n, 2) float, left/right
    sample_rate: int = SAMPLE_RATE
    scale: float = 1.0  # applied peak-normalization factor
    silent: bool = False

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate

    @property
    def left(self) -> np.ndarray:
        return self.samples[:, 0]

    @property
    def right(self) -> np.ndarray:
        return self.samples[:, 1]


def wet_mix(distance: float) -> float:
    lo, hi = MIX_RANGE
    return min(max(MIX_PER_METER * distance, lo), hi)


def render_mix(impacts, room, listener, bank: ModeBank, sr: int = SAMPLE_RATE,
               acoustics: RoomAcoustics | None = None, excitation_scale: float = 1.0,
               reverb: bool = True) -> np.ndarray:
    """Untrimmed, unnormalized stereo mix of every impact (linear in the excitation)."""
    acoustics = room_acoustics(room) if acoustics is None else acoustics
    head = head_position(listener)
    events = []
    for ev in impacts:
        mono = synthesize_modes(bank, excitation_scale * excitation_amplitude(ev), sr)
        r = math.dist(head, ev.position)
        events.append((ev, mono, r))
    if not events:
        return np.zeros((0, 2))
    irs = [schroeder_ir(acoustics.rt60, sr, ch) for ch in (0, 1)] if reverb else None
    tail = len(irs[0]) if reverb else 0
    n = max(int(math.ceil((ev.time + r / SPEED_OF_SOUND + 1e-3) * sr)) + len(mono)
            for ev, mono, r in events) + 2 * FIR_HALF + 2
    dry = np.zeros((n + tail, 2))
    wet_src = np.zeros(n)
    for ev, mono, r in events:
        m = wet_mix(r) if reverb else 0.0
        dry += (1.0 - m) * spatialize(mono, ev.position, listener, sr, acoustics.direct_gain_ref,
                                      offset=ev.time, length=n + tail)
        if m > 0:
            add_delayed(wet_src, mono, (ev.time + r / SPEED_OF_SOUND) * sr,
                        m * acoustics.direct_gain_ref)
    if reverb:
        for ch in (0, 1):
            w = fftconvolve(wet_src, irs[ch])
            dry[:len(w), ch] += w
    return dry


def render_episode_audio(impacts, room, listener, bank: ModeBank | None = None,
                         sr: int = SAMPLE_RATE, acoustics: RoomAcoustics | None = None,
                         seed: int = 0, reverb: bool = True) -> BinauralClip:
    """Render a fall event heard from `listener`, trimmed and clamped to 0.5-4 s.

    Without an explicit `bank` the first impact's object material is used at
    unit size. An empty impact list yields a flagged silent clip.
    """
    impacts = list(impacts)
    if any(b.time < a.time for a, b in zip(impacts, impacts[1:])):
        raise ValueError("impacts must be time-ordered")
    if not impacts:
        return BinauralClip(np.zeros((int(MIN_DURATION * sr), 2)), sr, 1.0, True)
    if bank is None:
        bank = mode_bank(impacts[0].object_material, 1.0, seed)
    x = render_mix(impacts, room, listener, bank, sr, acoustics, reverb=reverb)
    loud = np.flatnonzero(np.abs(x).max(axis=1) >= TRIM_LEVEL)
    n = int(loud[-1]) + 1 if len(loud) else 0
    n = min(max(n, int(MIN_DURATION * sr)), int(MAX_DURATION * sr))
    if n > len(x):
        x = np.vstack([x, np.zeros((n - len(x), 2))])
    x = x[:n]
    peak = float(np.abs(x).max()) if n else 0.0
    scale = 1.0
    if peak > 1.0:
        scale = 1.0 / peak
        x = x * scale
    return BinauralClip(x, sr, scale, False)
