"""Modal synthesis: per-material mode banks and damped-sinusoid impact rendering."""
from __future__ import annotations

import math
import zlib
from dataclasses import dataclass

import numpy as np

from ..world import MATERIALS, ObjectSpec, material

F_MIN, F_MAX = 60.0, 16000.0
MAX_MODES = 32
C0 = 2.0  # global excitation calibration
SOFT_SURFACE_FACTOR = 0.3
FREQ_JITTER = 0.03
REFERENCE_SIZE = 0.05  # m; object max half-extent with size_scale 1
MAX_IMPACT_LENGTH = 3.0


@dataclass(frozen=True)
class ModeBank:
    modes: tuple[tuple[float, float, float], ...]  # (frequency Hz, decay s, gain)
    material: str
    size_scale: float

    @property
    def frequencies(self) -> np.ndarray:
        return np.array([m[0] for m in self.modes])

    @property
    def taus(self) -> np.ndarray:
        return np.array([m[1] for m in self.modes])

    @property
    def gains(self) -> np.ndarray:
        return np.array([m[2] for m in self.modes])


def _material_pattern(name: str):
    """Fixed (frequency, decay, gain) pattern shared by every object of a material."""
    m = material(name)
    rng = np.random.default_rng(zlib.crc32(name.encode()))
    n = m.n_modes
    f_lo, f_hi = m.band
    freqs = np.sort(np.exp(rng.uniform(math.log(f_lo), math.log(f_hi), n)))
    freqs[0] = f_lo * rng.uniform(1.0, 1.15)
    t_lo, t_hi = m.tau
    # higher modes ring shorter
    frac = np.linspace(0.0, 1.0, n) if n > 1 else np.zeros(1)
    taus = t_hi * (t_lo / t_hi) ** frac
    taus[1:] *= rng.uniform(0.8, 1.0, n - 1)
    gains = rng.uniform(0.4, 1.0, n) / (1.0 + 0.15 * np.arange(n))
    return freqs, taus, gains


def mode_bank(material_name: str, size_scale: float, seed: int) -> ModeBank:
    if not size_scale > 0:
        raise ValueError("size_scale must be positive")
    freqs, taus, gains = _material_pattern(material_name)
    idx = list(MATERIALS).index(material_name)
    rng = np.random.default_rng([seed & 0xFFFFFFFF, idx, 11])
    freqs = freqs * (1.0 + rng.uniform(-FREQ_JITTER, FREQ_JITTER, len(freqs))) / size_scale
    keep = (freqs >= F_MIN) & (freqs <= F_MAX)
    if not keep.any():
        freqs = np.clip(freqs, F_MIN, F_MAX)
        keep[0] = True
    freqs, taus, gains = freqs[keep][:MAX_MODES], taus[keep][:MAX_MODES], gains[keep][:MAX_MODES]
    gains = gains / math.sqrt(float(np.sum(gains ** 2)))
    modes = tuple((float(f), float(t), float(g)) for f, t, g in zip(freqs, taus, gains))
    return ModeBank(modes, material_name, float(size_scale))


def object_size_scale(extent) -> float:
    return math.sqrt(max(extent) / REFERENCE_SIZE)


def object_mode_bank(obj: ObjectSpec, seed: int) -> ModeBank:
    return mode_bank(obj.material, object_size_scale(obj.extent), seed)


def excitation_amplitude(ev) -> float:
    """A = c0 * v_n * sqrt(reduced mass), softened on yielding surfaces."""
    a = C0 * ev.normal_speed * math.sqrt(ev.reduced_mass)
    if material(ev.surface_material).soft:
        a *= SOFT_SURFACE_FACTOR
    return a


def impact_length(bank: ModeBank) -> float:
    return min(5.0 * max(bank.taus), MAX_IMPACT_LENGTH)


def synthesize_modes(bank: ModeBank, amplitude: float, sr: int = 44100,
                     length: float | None = None) -> np.ndarray:
    length = impact_length(bank) if length is None else length
    n = int(round(length * sr))
    if amplitude == 0:
        return np.zeros(n)
    t = np.arange(n) / sr
    out = np.zeros(n)
    for f, tau, g in bank.modes:
        out += g * np.exp(-t / tau) * np.sin(2 * np.pi * f * t)
    return amplitude * out


def synthesize_impact(bank: ModeBank, ev, sr: int = 44100) -> np.ndarray:
    if ev.normal_speed < 0:
        raise ValueError("normal_speed must be >= 0")
    return synthesize_modes(bank, excitation_amplitude(ev), sr)
