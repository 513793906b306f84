"""Scorer-protocol adapter for pre-trained eight-emotion text classifiers."""

__version__ = "0.1.0"

# Wire order of every response's scores object. Checkpoints may order their
# heads differently; the --labels map permutes model outputs into this order.
CANONICAL_EMOTIONS = (
    "fear",
    "sadness",
    "surprise",
    "anticipation",
    "joy",
    "anger",
    "disgust",
    "trust",
)
