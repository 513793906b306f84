"""Canonical eight-emotion basis shared by every module.

All score vectors, CSV columns, and plot legends use this fixed order.
"""
from __future__ import annotations

EMOTIONS: tuple[str, ...] = (
    "fear",
    "sadness",
    "surprise",
    "anticipation",
    "joy",
    "anger",
    "disgust",
    "trust",
)

N_EMOTIONS = len(EMOTIONS)

EMOTION_INDEX: dict[str, int] = {name: i for i, name in enumerate(EMOTIONS)}

# One color per emotion, in canonical order: blue, orange, green, red,
# purple, brown, pink, gray.
PALETTE: tuple[str, ...] = (
    "#1f77b4",
    "#ff7f0e",
    "#2ca02c",
    "#d62728",
    "#9467bd",
    "#8c564b",
    "#e377c2",
    "#7f7f7f",
)


def emotion_index(name: str) -> int:
    """Resolve an emotion name to its canonical index, raising on unknowns."""
    try:
        return EMOTION_INDEX[name]
    except KeyError:
        raise ValueError(f"unknown emotion {name!r}; expected one of {', '.join(EMOTIONS)}") from None
