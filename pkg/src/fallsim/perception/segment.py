"""Ground-truth and noise-degraded instance segmentation from semantic renders."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..world import CATEGORIES, N_CATEGORIES


@dataclass(frozen=True, eq=False)
class SegNoiseModel:
    drop_prob: float
    confusion: np.ndarray  # (30, 30) row-stochastic, indexed by category index - 1
    seed: int = 0

    def __post_init__(self):
        c = np.asarray(self.confusion, dtype=float)
        if c.shape != (N_CATEGORIES, N_CATEGORIES):
            raise ValueError("confusion must be 30x30")
        if not 0.0 <= self.drop_prob <= 1.0:
            raise ValueError("drop_prob must lie in [0, 1]")
        if (c < 0).any() or np.abs(c.sum(axis=1) - 1.0).max() > 1e-9:
            raise ValueError("confusion rows must be non-negative and sum to 1")

    @classmethod
    def default(cls, seed: int = 0, drop_prob: float = 0.1, correct: float = 0.9) -> SegNoiseModel:
        """Diagonal `correct`, remaining mass spread over categories of the same material."""
        c = np.zeros((N_CATEGORIES, N_CATEGORIES))
        for i, a in enumerate(CATEGORIES):
            peers = [j for j, b in enumerate(CATEGORIES) if j != i and b.default_material == a.default_material]
            if peers:
                c[i, i] = correct
                c[i, peers] = (1.0 - correct) / len(peers)
            else:
                c[i, i] = 1.0
        return cls(drop_prob, c, seed)

    def outcome(self, category_index: int) -> int | None:
        """Reported label for an object instance, or None if missed; fixed per (seed, instance)."""
        rng = np.random.default_rng([self.seed & 0xFFFFFFFF, category_index, 5])
        if rng.random() < self.drop_prob:
            return None
        row = self.confusion[category_index - 1]
        return int(rng.choice(N_CATEGORIES, p=row)) + 1


def segment(semantic: np.ndarray, noise: SegNoiseModel | None = None) -> dict[int, np.ndarray]:
    """Per-category boolean masks over object pixels (ids 1..30).

    Each category present in the image is one object instance.
    """
    masks: dict[int, np.ndarray] = {}
    ids = np.unique(semantic)
    for cid in ids[(ids >= 1) & (ids <= N_CATEGORIES)]:
        cid = int(cid)
        label = cid if noise is None else noise.outcome(cid)
        if label is None:
            continue
        m = semantic == cid
        masks[label] = masks[label] | m if label in masks else m
    return masks
