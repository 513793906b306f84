"""Protocol loop: NDJSON requests on stdin, NDJSON responses on stdout.

Request ``{"id": str, "text": str}``; response ``{"id": str, "scores":
{emotion: prob}}`` with scores softmax-normalized in canonical emotion
order, or ``{"id": str, "error": str}`` when inference fails for that
request. Requests are batched opportunistically: whatever is already queued
is folded into one model call (up to the configured batch size), so a
single pending request never waits.
"""
from __future__ import annotations

import json
import queue
import sys
import threading
from typing import IO

import numpy as np

from emoflow_adapter import CANONICAL_EMOTIONS
from emoflow_adapter.models import AdapterConfig


def _softmax_rows(logits: np.ndarray) -> np.ndarray:
    z = np.exp(logits - logits.max(axis=1, keepdims=True))
    return z / z.sum(axis=1, keepdims=True)


def _read_lines(stdin: IO[str], out: queue.Queue) -> None:
    for line in stdin:
        out.put(line)
    out.put(None)


class _Session:
    def __init__(self, cfg: AdapterConfig, model, stdout: IO[str], stderr: IO[str]):
        self.cfg = cfg
        self.model = model
        self.permutation = cfg.canonical_permutation()
        self.stdout = stdout
        self.stderr = stderr

    def _emit(self, payload: dict) -> None:
        self.stdout.write(json.dumps(payload, ensure_ascii=False) + "\n")

    def _respond(self, request_id: str, probabilities: np.ndarray) -> None:
        scores = {name: float(p) for name, p in zip(CANONICAL_EMOTIONS, probabilities)}
        self._emit({"id": request_id, "scores": scores})

    def _predict_batch(self, requests: list[tuple[str, str]]) -> None:
        texts = [text for _, text in requests]
        try:
            logits = np.asarray(self.model.predict(texts), dtype=float)
            probs = _softmax_rows(logits[:, self.permutation])
            for (request_id, _), row in zip(requests, probs):
                self._respond(request_id, row)
            return
        except Exception:
            pass
        # Batch failed somewhere: isolate per request so one poison text
        # cannot take down its batch mates.
        for request_id, text in requests:
            try:
                logits = np.asarray(self.model.predict([text]), dtype=float)
                self._respond(request_id, _softmax_rows(logits[:, self.permutation])[0])
            except Exception as exc:
                self._emit({"id": request_id, "error": str(exc)})

    def handle(self, lines: list[str]) -> None:
        requests: list[tuple[str, str]] = []
        for line in lines:
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError:
                print("adapter: skipping unparseable request line", file=self.stderr)
                continue
            request_id = record.get("id")
            if not isinstance(request_id, str):
                print("adapter: skipping request without string id", file=self.stderr)
                continue
            text = record.get("text")
            if not isinstance(text, str):
                self._emit({"id": request_id, "error": "request lacks a text field"})
                continue
            requests.append((request_id, text))
        if requests:
            self._predict_batch(requests)
        self.stdout.flush()


def serve(cfg: AdapterConfig, model, stdin: IO[str] | None = None,
          stdout: IO[str] | None = None, stderr: IO[str] | None = None) -> int:
    """Run the protocol loop until stdin closes; returns the exit status."""
    cfg.validate()
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    stderr = stderr if stderr is not None else sys.stderr
    session = _Session(cfg, model, stdout, stderr)

    lines: queue.Queue = queue.Queue()
    reader = threading.Thread(target=_read_lines, args=(stdin, lines), daemon=True)
    reader.start()

    eof = False
    while not eof:
        first = lines.get()
        if first is None:
            break
        batch = [first]
        while len(batch) < cfg.batch_size:
            try:
                nxt = lines.get_nowait()
            except queue.Empty:
                break
            if nxt is None:
                eof = True
                break
            batch.append(nxt)
        session.handle(batch)
    stdout.flush()
    return 0
