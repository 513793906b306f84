"""Emotion time-series and directional-influence analysis between two channels."""

from emoflow.emotions import EMOTIONS, N_EMOTIONS

__all__ = ["EMOTIONS", "N_EMOTIONS"]
__version__ = "0.1.0"
