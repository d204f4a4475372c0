"""Schroeder reverberator (4 parallel combs, 2 series allpasses) and RT60 measurement."""
from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.signal import lfilter

# Slightly different delay sets per ear keep the diffuse tail decorrelated.
COMB_DELAYS = ((0.0297, 0.0371, 0.0411, 0.0437), (0.0307, 0.0359, 0.0423, 0.0451))
ALLPASS = ((0.0050, 0.7), (0.0017, 0.7))


def _comb(x, delay, g):
    b = np.zeros(delay + 1)
    b[delay] = 1.0
    a = np.zeros(delay + 1)
    a[0], a[delay] = 1.0, -g
    return lfilter(b, a, x)


def _allpass(x, delay, g):
    b = np.zeros(delay + 1)
    b[0], b[delay] = -g, 1.0
    a = np.zeros(delay + 1)
    a[0], a[delay] = 1.0, -g
    return lfilter(b, a, x)


@lru_cache(maxsize=64)
def _ir(rt60: float, sr: int, channel: int) -> np.ndarray:
    n = int((1.2 * rt60 + 0.1) * sr)
    x = np.zeros(n)
    x[0] = 1.0
    y = np.zeros(n)
    for d in COMB_DELAYS[channel]:
        g = 10.0 ** (-3.0 * d / rt60)
        y += _comb(x, int(round(d * sr)), g)
    for d, g in ALLPASS:
        y = _allpass(y, int(round(d * sr)), g)
    y /= np.sqrt(np.sum(y ** 2))
    y.setflags(write=False)
    return y


def schroeder_ir(rt60: float, sr: int = 44100, channel: int = 0) -> np.ndarray:
    """Unit-energy impulse response whose combs decay 60 dB in `rt60` seconds."""
    return _ir(round(float(rt60), 9), int(sr), int(channel))


def measure_rt60(ir: np.ndarray, sr: int = 44100, lo_db: float = -5.0, hi_db: float = -25.0) -> float:
    """RT60 from Schroeder backward integration, extrapolated from a T20 fit."""
    edc = np.cumsum(ir[::-1] ** 2)[::-1]
    edc_db = 10 * np.log10(edc / edc[0] + 1e-300)
    idx = np.flatnonzero((edc_db <= lo_db) & (edc_db >= hi_db))
    t = idx / sr
    slope, _ = np.polyfit(t, edc_db[idx], 1)
    return -60.0 / slope
