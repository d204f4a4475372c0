"""Log-mel spectrograms (HTK mel scale, triangular filters)."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

N_MELS = 64
F_LO, F_HI = 60.0, 16000.0
WINDOW_S = 0.025
HOP_S = 0.010
FLOOR_DB = -80.0
N_FFT = 2048


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=float) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=float) / 2595.0) - 1.0)


@lru_cache(maxsize=8)
def mel_filterbank(sr: int = 44100, n_fft: int = N_FFT, n_mels: int = N_MELS,
                   f_lo: float = F_LO, f_hi: float = F_HI) -> np.ndarray:
    """(n_mels, n_fft//2+1) unit-peak triangular filters on the mel axis."""
    edges = mel_to_hz(np.linspace(hz_to_mel(f_lo), hz_to_mel(f_hi), n_mels + 2))
    freqs = np.arange(n_fft // 2 + 1) * sr / n_fft
    lo, mid, hi = edges[:-2, None], edges[1:-1, None], edges[2:, None]
    up = (freqs[None] - lo) / (mid - lo)
    down = (hi - freqs[None]) / (hi - mid)
    fb = np.maximum(0.0, np.minimum(up, down))
    fb.setflags(write=False)
    return fb


@dataclass(frozen=True, eq=False)
class Spectrogram:
    values: np.ndarray  # (frames, n_mels) dB
    sample_rate: int
    hop: int
    window: int

    @property
    def n_frames(self) -> int:
        return self.values.shape[0]


def frame_count(n: int, window: int, hop: int) -> int:
    return max(0, (n - window) // hop + 1)


def log_mel_signal(x: np.ndarray, sr: int = 44100) -> Spectrogram:
    win = int(round(WINDOW_S * sr))
    hop = int(round(HOP_S * sr))
    x = np.asarray(x, dtype=float)
    n = frame_count(len(x), win, hop)
    if n == 0:
        return Spectrogram(np.zeros((0, N_MELS)), sr, hop, win)
    idx = np.arange(win)[None, :] + hop * np.arange(n)[:, None]
    frames = x[idx] * np.hanning(win)[None, :]
    mag = np.abs(np.fft.rfft(frames, N_FFT, axis=1))
    mel = mag @ mel_filterbank(sr).T
    db = 20.0 * np.log10(np.maximum(mel, 10 ** (FLOOR_DB / 20)))
    return Spectrogram(np.maximum(db, FLOOR_DB), sr, hop, win)


def log_mel(clip, channel: str = "mix") -> Spectrogram:
    """Log-mel spectrogram of one channel ("left", "right") or the mono mix."""
    s = np.asarray(clip.samples)
    if channel == "left":
        x = s[:, 0]
    elif channel == "right":
        x = s[:, 1]
    elif channel == "mix":
        x = 0.5 * (s[:, 0] + s[:, 1])
    else:
        raise ValueError(f"unknown channel {channel!r}")
    return log_mel_signal(x, clip.sample_rate)
