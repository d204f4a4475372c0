"""16-bit PCM stereo WAV export and import via the standard-library wave module."""
from __future__ import annotations

import wave
from pathlib import Path

import numpy as np

from .render import SAMPLE_RATE, BinauralClip

FULL_SCALE = 32767


class WavError(IOError):
    pass


def write_wav(clip: BinauralClip, path) -> Path:
    path = Path(path)
    if clip.sample_rate != SAMPLE_RATE:
        raise WavError(f"sample rate must be {SAMPLE_RATE}")
    pcm = np.clip(np.round(np.asarray(clip.samples) * FULL_SCALE), -FULL_SCALE, FULL_SCALE)
    data = pcm.astype("<i2").tobytes()
    try:
        with wave.open(str(path), "wb") as w:
            w.setnchannels(2)
            w.setsampwidth(2)
            w.setframerate(SAMPLE_RATE)
            w.writeframes(data)
    except OSError as e:
        raise WavError(f"cannot write {path}: {e}") from e
    return path


def read_wav(path) -> BinauralClip:
    try:
        with wave.open(str(path), "rb") as w:
            rate, channels, width = w.getframerate(), w.getnchannels(), w.getsampwidth()
            frames = w.readframes(w.getnframes())
    except (OSError, EOFError, wave.Error) as e:
        raise WavError(f"cannot read {path}: {e}") from e
    if rate != SAMPLE_RATE:
        raise WavError(f"{path}: sample rate {rate}, expected {SAMPLE_RATE}")
    if width != 2 or channels not in (1, 2):
        raise WavError(f"{path}: unsupported format ({channels} ch, {8 * width}-bit)")
    x = np.frombuffer(frames, dtype="<i2").astype(float) / FULL_SCALE
    x = x.reshape(-1, channels)
    if channels == 1:
        x = np.repeat(x, 2, axis=1)
    return BinauralClip(x, rate)
