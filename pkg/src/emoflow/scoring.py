"""Document scorers mapping text onto the eight-emotion probability simplex.

Two scorers share one output contract: a built-in additive lexicon scorer,
and a client for external scorer processes speaking newline-delimited JSON
over stdin/stdout (request ``{"id", "text"}``, response ``{"id", "scores"}``;
responses may arrive out of order).
"""
from __future__ import annotations

import json
import logging
import queue
import subprocess
import threading
import unicodedata
from dataclasses import dataclass, field

import numpy as np

from emoflow.corpus import Document
from emoflow.emotions import EMOTIONS, N_EMOTIONS

logger = logging.getLogger(__name__)

SIMPLEX_TOL = 1e-9


@dataclass(frozen=True)
class ScoredDocument:
    """Emotion scores for one retained document; ``document_ref`` is (channel, id)."""

    document_ref: tuple[str, str]
    timestamp: int
    scores: np.ndarray


@dataclass(frozen=True)
class ScoreError:
    document_ref: tuple[str, str]
    reason: str


class ScorerProcessError(RuntimeError):
    """External scorer exited before answering every request.

    Carries the partial results gathered so far so callers can report them.
    """

    def __init__(self, message: str, scored: list[ScoredDocument], errors: list[ScoreError]):
        super().__init__(message)
        self.scored = scored
        self.errors = errors


def validate_simplex(v: np.ndarray) -> bool:
    """True iff all components lie in [0, 1] and they sum to 1 within 1e-9."""
    v = np.asarray(v, dtype=float)
    if v.shape != (N_EMOTIONS,):
        return False
    if np.any(v < 0.0) or np.any(v > 1.0):
        return False
    return abs(float(v.sum()) - 1.0) <= SIMPLEX_TOL


def tokenize(text: str) -> list[str]:
    """Split on whitespace and Unicode punctuation; no stemming, no case folding."""
    tokens: list[str] = []
    current: list[str] = []
    for ch in text:
        if ch.isspace() or unicodedata.category(ch).startswith("P"):
            if current:
                tokens.append("".join(current))
                current = []
        else:
            current.append(ch)
    if current:
        tokens.append("".join(current))
    return tokens


@dataclass
class Lexicon:
    """Token-to-weights lookup with additive-uniform smoothing.

    ``smoothing_mass`` spreads uniformly across the eight components so a
    document with no matched token scores exactly uniform rather than 0/0.
    """

    entries: dict[str, np.ndarray] = field(default_factory=dict)
    smoothing_mass: float = 1.0

    def validate(self) -> None:
        if self.smoothing_mass <= 0.0:
            raise ValueError("smoothing_mass must be positive")
        any_positive = False
        for token, weights in self.entries.items():
            w = np.asarray(weights, dtype=float)
            if w.shape != (N_EMOTIONS,):
                raise ValueError(f"lexicon entry {token!r} must carry {N_EMOTIONS} weights")
            if np.any(w < 0.0):
                raise ValueError(f"lexicon entry {token!r} has a negative weight")
            if np.any(w > 0.0):
                any_positive = True
        if not any_positive:
            raise ValueError("lexicon needs at least one positive weight")


def load_lexicon(path: str, smoothing_mass: float = 1.0) -> Lexicon:
    """Load a UTF-8 JSON object mapping token -> 8-element weight array."""
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    if not isinstance(raw, dict):
        raise ValueError(f"{path}: lexicon file must be a JSON object")
    entries = {token: np.asarray(weights, dtype=float) for token, weights in raw.items()}
    lex = Lexicon(entries=entries, smoothing_mass=smoothing_mass)
    lex.validate()
    return lex


def score_lexicon(text: str, lex: Lexicon) -> np.ndarray:
    """Score one text: summed weights of matched tokens plus uniform smoothing.

    Every token occurrence counts. The raw vector is normalized to sum 1,
    so empty or fully unmatched text yields the uniform vector.
    """
    raw = np.full(N_EMOTIONS, lex.smoothing_mass / N_EMOTIONS, dtype=float)
    for token in tokenize(text):
        weights = lex.entries.get(token)
        if weights is not None:
            raw += weights
    return raw / raw.sum()


def score_documents_lexicon(docs: list[Document], lex: Lexicon) -> list[ScoredDocument]:
    lex.validate()
    return [
        ScoredDocument(
            document_ref=(doc.channel, doc.id),
            timestamp=doc.timestamp,
            scores=score_lexicon(doc.text, lex),
        )
        for doc in docs
    ]


class ExternalScorer:
    """Host side of the scorer plugin protocol.

    Spawns one scorer process, streams one request per document, matches
    responses by id, and reassembles results in document order. ``timeout``
    bounds the silence (seconds) tolerated while responses are pending.
    """

    def __init__(self, command: list[str], timeout: float = 60.0):
        if not command:
            raise ValueError("external scorer command must not be empty")
        self.command = list(command)
        self.timeout = timeout

    def score(self, docs: list[Document]) -> tuple[list[ScoredDocument], list[ScoreError]]:
        return score_external(docs, self)


def _write_requests(stdin, payloads: list[str]) -> None:
    try:
        for payload in payloads:
            stdin.write(payload)
        stdin.close()
    except (BrokenPipeError, OSError):
        # Reader side reports the process death with proper context.
        pass


def _read_responses(stdout, out: queue.Queue) -> None:
    for line in stdout:
        out.put(line)
    out.put(None)  # EOF sentinel


def _normalize_response(ref: tuple[str, str], scores: dict) -> np.ndarray | ScoreError:
    vec = np.empty(N_EMOTIONS, dtype=float)
    for i, name in enumerate(EMOTIONS):
        value = scores.get(name)
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            return ScoreError(ref, f"missing or non-numeric score for {name!r}")
        vec[i] = float(value)
    if not np.all(np.isfinite(vec)):
        return ScoreError(ref, "non-finite score component")
    if np.any(vec < 0.0):
        return ScoreError(ref, "negative score component violates the protocol")
    total = float(vec.sum())
    if total <= 0.0:
        return ScoreError(ref, "scores sum to zero")
    if not 0.99 <= total <= 1.01:
        logger.warning("scorer response for %s sums to %.6f; renormalizing", ref, total)
    return vec / total


def score_external(
    docs: list[Document], scorer: ExternalScorer
) -> tuple[list[ScoredDocument], list[ScoreError]]:
    """Score documents through an external scorer process.

    Returns scored documents in input order plus per-document error records
    (protocol violations, per-request errors, responses still missing after
    the timeout). A scorer that exits before answering every request raises
    :class:`ScorerProcessError` carrying the partial results.
    """
    if not docs:
        return [], []

    # Wire ids must be unique across the whole stream even when the two
    # channels reuse ids, so requests carry "channel:id".
    wire_ids = [f"{doc.channel}:{doc.id}" for doc in docs]
    payloads = [
        json.dumps({"id": wid, "text": doc.text}, ensure_ascii=False) + "\n"
        for wid, doc in zip(wire_ids, docs)
    ]

    proc = subprocess.Popen(
        scorer.command,
        stdin=subprocess.PIPE,
        stdout=subprocess.PIPE,
        stderr=subprocess.DEVNULL,
        text=True,
        encoding="utf-8",
    )
    lines: queue.Queue = queue.Queue()
    writer = threading.Thread(target=_write_requests, args=(proc.stdin, payloads), daemon=True)
    reader = threading.Thread(target=_read_responses, args=(proc.stdout, lines), daemon=True)
    writer.start()
    reader.start()

    expected = set(wire_ids)
    responses: dict[str, np.ndarray | ScoreError] = {}
    eof = False
    timed_out = False
    while expected and not eof:
        try:
            line = lines.get(timeout=scorer.timeout)
        except queue.Empty:
            timed_out = True
            break
        if line is None:
            eof = True
            break
        line = line.strip()
        if not line:
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError:
            logger.warning("ignoring unparseable scorer output line")
            continue
        wid = record.get("id")
        if wid not in expected and wid not in responses:
            logger.warning("ignoring scorer response with unknown id %r", wid)
            continue
        if wid in responses:
            logger.warning("ignoring duplicate scorer response for id %r", wid)
            continue
        channel, _, doc_id = wid.partition(":")
        ref = (channel, doc_id)
        if "error" in record:
            responses[wid] = ScoreError(ref, f"scorer error: {record['error']}")
        elif isinstance(record.get("scores"), dict):
            responses[wid] = _normalize_response(ref, record["scores"])
        else:
            responses[wid] = ScoreError(ref, "response carries neither scores nor error")
        expected.discard(wid)

    missing_reason = "no response before timeout" if timed_out else "no response from scorer"
    scored: list[ScoredDocument] = []
    errors: list[ScoreError] = []
    for wid, doc in zip(wire_ids, docs):
        ref = (doc.channel, doc.id)
        got = responses.get(wid)
        if got is None:
            errors.append(ScoreError(ref, missing_reason))
        elif isinstance(got, ScoreError):
            errors.append(got)
        else:
            scored.append(ScoredDocument(document_ref=ref, timestamp=doc.timestamp, scores=got))

    if timed_out:
        proc.kill()
        proc.wait()
        return scored, errors

    # EOF: a clean exit turns leftover ids into per-document error records;
    # an abnormal exit aborts with whatever was gathered.
    exit_code = proc.wait()
    if exit_code != 0:
        raise ScorerProcessError(
            f"scorer exited with code {exit_code} leaving {len(expected)} request(s) unanswered",
            scored,
            errors,
        )
    return scored, errors
