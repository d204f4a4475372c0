"""Analysis-by-synthesis sound classification against an exemplar library."""
from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from ..audio import BinauralClip, object_mode_bank, read_wav, synthesize_modes, write_wav
from ..world import CATEGORIES, ObjectSpec
from .spectral import FLOOR_DB, log_mel_signal

REFERENCE_SPEED = 2.0
EXEMPLARS_PER_CATEGORY = 5
EXEMPLAR_SEED_BASE = 7_000_000
ACTIVE_RANGE_DB = 40.0
SCORE_DECIMALS = 10
INDEX_VERSION = 1


class LibraryError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Exemplar:
    category: str
    seed: int
    feature: np.ndarray
    waveform: np.ndarray | None = None


def spectral_signature(x: np.ndarray, sr: int = 44100) -> np.ndarray:
    """Time-averaged log-mel over active frames, level-independent.

    The waveform is peak-normalized, and only frames whose loudest band is
    within 40 dB of the loudest frame contribute.
    """
    x = np.asarray(x, dtype=float)
    peak = np.abs(x).max() if len(x) else 0.0
    if peak == 0:
        return np.zeros(64)
    spec = log_mel_signal(x / peak, sr).values
    if len(spec) == 0:
        return np.zeros(64)
    loud = spec.max(axis=1)
    active = spec[loud >= loud.max() - ACTIVE_RANGE_DB]
    return active.mean(axis=0) - FLOOR_DB


def _mono(clip) -> np.ndarray:
    s = np.asarray(clip.samples, dtype=float)
    return s if s.ndim == 1 else 0.5 * (s[:, 0] + s[:, 1])


def exemplar_waveform(category: str, seed: int, sr: int = 44100) -> np.ndarray:
    obj = ObjectSpec.default(category)
    bank = object_mode_bank(obj, seed)
    amp = 2.0 * REFERENCE_SPEED * np.sqrt(obj.mass)
    return synthesize_modes(bank, amp, sr)


def build_library(k: int = EXEMPLARS_PER_CATEGORY, seed_base: int = EXEMPLAR_SEED_BASE,
                  keep_waveforms: bool = False) -> tuple[Exemplar, ...]:
    out = []
    for c in CATEGORIES:
        for j in range(k):
            seed = seed_base + 100 * c.index + j
            w = exemplar_waveform(c.id, seed)
            out.append(Exemplar(c.id, seed, spectral_signature(w), w if keep_waveforms else None))
    return tuple(out)


@lru_cache(maxsize=1)
def default_library() -> tuple[Exemplar, ...]:
    return build_library()


def classify_sound(clip, library) -> list[tuple[str, float]]:
    """Rank all categories by their best exemplar cosine similarity (ties by category id)."""
    if not library:
        raise LibraryError("exemplar library is empty")
    q = spectral_signature(_mono(clip), getattr(clip, "sample_rate", 44100))
    qn = np.linalg.norm(q)
    best = {c.id: 0.0 for c in CATEGORIES}
    if qn > 0:
        for ex in library:
            en = np.linalg.norm(ex.feature)
            s = float(q @ ex.feature / (qn * en)) if en > 0 else 0.0
            best[ex.category] = max(best[ex.category], round(s, SCORE_DECIMALS))
    order = {c.id: c.index for c in CATEGORIES}
    return sorted(best.items(), key=lambda kv: (-kv[1], order[kv[0]]))


def save_library(library, directory) -> Path:
    """Write exemplar WAVs plus an index file; waveforms must be kept.

    Signatures are stored in the index so that 16-bit quantization of the
    audio does not change classification after reloading.
    """
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    entries = []
    for ex in library:
        if ex.waveform is None:
            raise LibraryError("library was built without waveforms")
        name = f"{ex.category}_{ex.seed}.wav"
        w = ex.waveform / max(1e-12, np.abs(ex.waveform).max())
        write_wav(BinauralClip(np.column_stack([w, w])), d / name)
        entries.append({"category": ex.category, "seed": ex.seed, "file": name,
                        "feature": [float(v) for v in ex.feature]})
    (d / "index.json").write_text(json.dumps({"version": INDEX_VERSION, "exemplars": entries}, indent=1))
    return d


def load_library(directory) -> tuple[Exemplar, ...]:
    d = Path(directory)
    index = json.loads((d / "index.json").read_text())
    if index.get("version") != INDEX_VERSION:
        raise LibraryError("unsupported library index version")
    out = []
    for e in index["exemplars"]:
        w = read_wav(d / e["file"]).samples[:, 0]
        feature = np.array(e["feature"]) if "feature" in e else spectral_signature(w)
        out.append(Exemplar(e["category"], int(e["seed"]), feature, w))
    if not out:
        raise LibraryError("exemplar library is empty")
    return tuple(out)
