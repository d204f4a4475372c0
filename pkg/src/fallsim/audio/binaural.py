"""Woodworth ITD + broadband ILD spatialization with fractional-sample delays."""
from __future__ import annotations

import math

import numpy as np

HEAD_RADIUS = 0.0875
SPEED_OF_SOUND = 343.0
EAR_HEIGHT = 1.2
MAX_ILD_DB = 6.0
MIN_DISTANCE = 0.2
FIR_HALF = 32

_WINDOW = np.blackman(2 * FIR_HALF + 1)


def woodworth_itd(theta: float) -> float:
    """ITD (s) for azimuth `theta` (rad, left positive); positive means the right ear lags.

    Sources behind the listener fold onto the matching frontal lateral angle.
    """
    lat = math.atan2(math.sin(theta), abs(math.cos(theta)))
    return HEAD_RADIUS / SPEED_OF_SOUND * (lat + math.sin(lat))


def azimuth(listener, source_pos) -> float:
    """Source azimuth (rad) relative to the listener heading, counter-clockwise positive."""
    dx = source_pos[0] - listener.position[0]
    dy = source_pos[1] - listener.position[1]
    th = math.atan2(dy, dx) - math.radians(listener.yaw)
    return math.atan2(math.sin(th), math.cos(th))


def head_position(listener):
    return (listener.position[0], listener.position[1], listener.position[2] + EAR_HEIGHT)


def delay_kernel(frac: float) -> np.ndarray:
    if frac == 0.0:
        h = np.zeros(2 * FIR_HALF + 1)
        h[FIR_HALF] = 1.0
        return h
    k = np.arange(-FIR_HALF, FIR_HALF + 1)
    return np.sinc(k - frac) * _WINDOW


def add_delayed(out: np.ndarray, x: np.ndarray, delay_samples: float, gain: float = 1.0) -> None:
    """out += gain * x delayed by a (fractional) number of samples, in place."""
    n0 = math.floor(delay_samples)
    frac = delay_samples - n0
    y = np.convolve(x, delay_kernel(frac)) * gain
    start = n0 - FIR_HALF
    a = max(0, -start)
    b = min(len(y), len(out) - start)
    if b > a:
        out[start + a:start + b] += y[a:b]


def spatialize(mono: np.ndarray, source_pos, listener, sr: int = 44100,
               direct_gain_ref: float = 1.0, offset: float = 0.0,
               length: int | None = None) -> np.ndarray:
    """Dry binaural rendering: propagation delay, 1/r gain, Woodworth ITD, broadband ILD.

    Returns an (n, 2) array (left, right). `offset` delays the whole event.
    """
    head = head_position(listener)
    r = math.dist(head, source_pos)
    theta = azimuth(listener, source_pos)
    itd = woodworth_itd(theta)
    gain = direct_gain_ref / max(r, MIN_DISTANCE)
    ild = 10 ** (-min(MAX_ILD_DB, MAX_ILD_DB * abs(math.sin(theta))) / 20)
    base = (offset + r / SPEED_OF_SOUND) * sr
    d_left = base + max(0.0, -itd) * sr
    d_right = base + max(0.0, itd) * sr
    g_left = gain * (ild if theta < 0 else 1.0)
    g_right = gain * (ild if theta > 0 else 1.0)
    if length is None:
        length = len(mono) + int(math.ceil(max(d_left, d_right))) + FIR_HALF + 1
    out = np.zeros((length, 2))
    left = np.zeros(length)
    right = np.zeros(length)
    add_delayed(left, mono, d_left, g_left)
    add_delayed(right, mono, d_right, g_right)
    out[:, 0] = left
    out[:, 1] = right
    return out
