"""Audio and visual perception: spectrograms, localization, classification, segmentation."""
from .classify import Exemplar, LibraryError, build_library, classify_sound, default_library, load_library, save_library
from .localize import (
    GoalEstimate,
    PerceptionError,
    audio_goal,
    bearing_from_itd,
    distance_features,
    estimate_distance,
    estimate_itd,
    goal_position,
)
from .segment import SegNoiseModel, segment
from .spectral import Spectrogram, log_mel, log_mel_signal, mel_filterbank

__all__ = [
    "Exemplar", "LibraryError", "build_library", "classify_sound", "default_library", "load_library",
    "save_library", "GoalEstimate", "PerceptionError", "audio_goal", "bearing_from_itd",
    "distance_features", "estimate_distance", "estimate_itd", "goal_position", "SegNoiseModel",
    "segment", "Spectrogram", "log_mel", "log_mel_signal", "mel_filterbank",
]
