"""Desk-scale fallen-object benchmark: simulation, audio, agents and evaluation."""

__version__ = "0.1.0"
