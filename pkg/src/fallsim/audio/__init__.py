"""Impact sound synthesis, binaural rendering, room reverberation and WAV I/O."""
from .binaural import SPEED_OF_SOUND, HEAD_RADIUS, azimuth, spatialize, woodworth_itd
from .modal import ModeBank, excitation_amplitude, mode_bank, object_mode_bank, synthesize_impact, synthesize_modes
from .render import SAMPLE_RATE, BinauralClip, render_episode_audio, render_mix
from .room import RoomAcoustics, room_acoustics, sabine_rt60
from .reverb import measure_rt60, schroeder_ir
from .wav import WavError, read_wav, write_wav

__all__ = [
    "SPEED_OF_SOUND", "HEAD_RADIUS", "SAMPLE_RATE", "azimuth", "spatialize", "woodworth_itd",
    "ModeBank", "excitation_amplitude", "mode_bank", "object_mode_bank", "synthesize_impact",
    "synthesize_modes", "BinauralClip", "render_episode_audio", "render_mix", "RoomAcoustics",
    "room_acoustics", "sabine_rt60", "measure_rt60", "schroeder_ir", "WavError", "read_wav", "write_wav",
]
