"""Model backends: every backend maps a batch of texts to (n, 8) raw logits.

A model argument ending in ``.json`` loads a stub spec (used for testing and
protocol conformance); anything else is treated as a transformers checkpoint
path or identifier and needs the ``neural`` extra installed.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from emoflow_adapter import CANONICAL_EMOTIONS


class ModelLoadError(Exception):
    pass


@dataclass
class AdapterConfig:
    model: str
    batch_size: int = 16
    max_seq_len: int = 128
    device: str = "cpu"
    labels: tuple[str, ...] = CANONICAL_EMOTIONS

    def validate(self) -> None:
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.max_seq_len < 8:
            raise ValueError("max_seq_len must be >= 8")
        if sorted(self.labels) != sorted(CANONICAL_EMOTIONS):
            raise ValueError("labels must be a permutation of the eight canonical emotions")

    def canonical_permutation(self) -> np.ndarray:
        """Column indices that reorder model-head outputs into canonical order."""
        return np.array([self.labels.index(name) for name in CANONICAL_EMOTIONS])


def _fnv1a(text: str) -> int:
    h = 2166136261
    for byte in text.encode("utf-8"):
        h = ((h ^ byte) * 16777619) & 0xFFFFFFFF
    return h


@dataclass
class StubModel:
    """Deterministic stand-in defined by a JSON spec.

    kind "fixed_logits" returns the same logits for every text; kind
    "text_hash" derives logits from a text hash so scores vary per
    document. ``fail_substring`` makes matching texts raise, exercising the
    per-request error path.
    """

    kind: str
    logits: np.ndarray | None = None
    scale: float = 1.0
    fail_substring: str | None = None

    def predict(self, texts: list[str]) -> np.ndarray:
        out = np.empty((len(texts), 8))
        for i, text in enumerate(texts):
            if self.fail_substring and self.fail_substring in text:
                raise ValueError(f"stub refuses text matching {self.fail_substring!r}")
            if self.kind == "fixed_logits":
                out[i] = self.logits
            else:
                h = _fnv1a(text)
                out[i] = [self.scale * (((h >> (4 * k)) & 0xF) / 15.0 - 0.5) for k in range(8)]
        return out


def _load_stub(path: str) -> StubModel:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            spec = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ModelLoadError(f"cannot load stub model {path}: {exc}") from None
    kind = spec.get("kind")
    if kind == "fixed_logits":
        logits = np.asarray(spec.get("logits", []), dtype=float)
        if logits.shape != (8,):
            raise ModelLoadError(f"{path}: fixed_logits spec needs exactly 8 logits")
        return StubModel(kind=kind, logits=logits, fail_substring=spec.get("fail_substring"))
    if kind == "text_hash":
        return StubModel(
            kind=kind, scale=float(spec.get("scale", 1.0)), fail_substring=spec.get("fail_substring")
        )
    raise ModelLoadError(f"{path}: unknown stub kind {kind!r}")


@dataclass
class TransformersModel:
    """Sequence-classification checkpoint with an 8-way head."""

    tokenizer: object = field(repr=False)
    model: object = field(repr=False)
    max_seq_len: int = 128
    device: str = "cpu"

    def predict(self, texts: list[str]) -> np.ndarray:
        import torch

        encoded = self.tokenizer(
            texts, return_tensors="pt", padding=True, truncation=True, max_length=self.max_seq_len
        ).to(self.device)
        with torch.no_grad():
            logits = self.model(**encoded).logits
        return logits.detach().cpu().numpy().astype(float)


def _load_transformers(cfg: AdapterConfig) -> TransformersModel:
    try:
        import torch  # noqa: F401
        from transformers import AutoModelForSequenceClassification, AutoTokenizer
    except ImportError as exc:
        raise ModelLoadError(
            f"transformers backend unavailable ({exc}); install the 'neural' extra"
        ) from None
    try:
        tokenizer = AutoTokenizer.from_pretrained(cfg.model)
        model = AutoModelForSequenceClassification.from_pretrained(cfg.model)
        model.eval()
        model.to(cfg.device)
    except Exception as exc:
        raise ModelLoadError(f"cannot load checkpoint {cfg.model}: {exc}") from None
    n_labels = getattr(model.config, "num_labels", None)
    if n_labels != 8:
        raise ModelLoadError(f"checkpoint {cfg.model} has {n_labels} labels; need 8")
    return TransformersModel(
        tokenizer=tokenizer, model=model, max_seq_len=cfg.max_seq_len, device=cfg.device
    )


def load_model(cfg: AdapterConfig):
    if cfg.model.endswith(".json"):
        return _load_stub(cfg.model)
    return _load_transformers(cfg)
