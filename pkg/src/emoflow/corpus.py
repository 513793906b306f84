"""Parsing, validation, filtering, and dedup of timestamped two-channel corpora.

Input format: UTF-8 JSONL, one object per line, keys ``id`` (string),
``timestamp`` (RFC 3339 string or integer epoch seconds), ``channel``
(``"social"`` or ``"news"``), ``text`` (string). Unknown keys are ignored.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import IO, Iterable

CHANNELS = ("social", "news")

_ASCII_LOWER = str.maketrans(
    "ABCDEFGHIJKLMNOPQRSTUVWXYZ", "abcdefghijklmnopqrstuvwxyz"
)


@dataclass(frozen=True)
class Document:
    """One timestamped text item; ``timestamp`` is UTC epoch seconds."""

    id: str
    timestamp: int
    channel: str
    text: str


@dataclass(frozen=True)
class ParseDiagnostic:
    line_no: int
    reason: str


@dataclass
class CorpusConfig:
    """Filtering parameters for one analysis run.

    ``keywords`` are OR-matched substrings (ASCII letters matched
    case-insensitively, everything else verbatim); an empty list disables
    keyword filtering. ``interval_start``/``interval_end`` are UTC epoch
    seconds and the interval is half-open ``[start, end)``.
    ``tz_offset_minutes`` shifts the day-bucketing boundary (default +540,
    i.e. UTC+9 days).
    """

    keywords: list[str] = field(default_factory=list)
    interval_start: int = 0
    interval_end: int = 0
    tz_offset_minutes: int = 540
    dedup: bool = True

    def validate(self) -> None:
        if self.interval_start >= self.interval_end:
            raise ValueError("interval_start must be earlier than interval_end")
        if not -840 <= self.tz_offset_minutes <= 840:
            raise ValueError("tz_offset_minutes must lie in [-840, +840]")


def parse_timestamp(value: object) -> int:
    """Normalize an RFC 3339 string or integer epoch seconds to epoch seconds."""
    if isinstance(value, bool):
        raise ValueError("timestamp must be an RFC 3339 string or integer epoch seconds")
    if isinstance(value, int):
        return value
    if isinstance(value, str):
        text = value.strip()
        if text.endswith(("Z", "z")):
            text = text[:-1] + "+00:00"
        try:
            dt = datetime.fromisoformat(text)
        except ValueError:
            raise ValueError(f"unparseable timestamp {value!r}") from None
        if dt.tzinfo is None:
            raise ValueError(f"timestamp {value!r} lacks a UTC offset")
        return int(dt.timestamp())
    raise ValueError("timestamp must be an RFC 3339 string or integer epoch seconds")


def format_timestamp(epoch: int) -> str:
    return datetime.fromtimestamp(epoch, tz=timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def parse_jsonl(stream: IO[bytes] | IO[str]) -> tuple[list[Document], list[ParseDiagnostic]]:
    """Parse newline-delimited JSON documents.

    Returns documents in input order. Malformed lines are never silently
    dropped: each yields a :class:`ParseDiagnostic` with its 1-based line
    number. A repeated ``(channel, id)`` keeps the first occurrence and
    flags the duplicate.
    """
    docs: list[Document] = []
    diagnostics: list[ParseDiagnostic] = []
    seen: set[tuple[str, str]] = set()

    for line_no, raw in enumerate(stream, start=1):
        if isinstance(raw, bytes):
            try:
                line = raw.decode("utf-8")
            except UnicodeDecodeError:
                diagnostics.append(ParseDiagnostic(line_no, "invalid UTF-8"))
                continue
        else:
            line = raw
        line = line.strip()
        if not line:
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            diagnostics.append(ParseDiagnostic(line_no, f"invalid JSON: {exc.msg}"))
            continue
        if not isinstance(record, dict):
            diagnostics.append(ParseDiagnostic(line_no, "record is not a JSON object"))
            continue

        missing = [k for k in ("id", "timestamp", "channel", "text") if k not in record]
        if missing:
            diagnostics.append(ParseDiagnostic(line_no, f"missing field(s): {', '.join(missing)}"))
            continue

        doc_id = record["id"]
        if not isinstance(doc_id, str) or not doc_id:
            diagnostics.append(ParseDiagnostic(line_no, "id must be a non-empty string"))
            continue
        channel = record["channel"]
        if channel not in CHANNELS:
            diagnostics.append(ParseDiagnostic(line_no, f"channel must be one of {CHANNELS}"))
            continue
        if not isinstance(record["text"], str):
            diagnostics.append(ParseDiagnostic(line_no, "text must be a string"))
            continue
        try:
            epoch = parse_timestamp(record["timestamp"])
        except ValueError as exc:
            diagnostics.append(ParseDiagnostic(line_no, str(exc)))
            continue

        key = (channel, doc_id)
        if key in seen:
            diagnostics.append(ParseDiagnostic(line_no, f"duplicate (channel, id) {key!r}"))
            continue
        seen.add(key)
        docs.append(Document(id=doc_id, timestamp=epoch, channel=channel, text=record["text"]))

    return docs, diagnostics


def _ascii_casefold(text: str) -> str:
    # Only ASCII letters are folded; non-ASCII text must match verbatim.
    return text.translate(_ASCII_LOWER)


def _matches_keywords(text: str, keywords: list[str]) -> bool:
    if not keywords:
        return True
    folded = _ascii_casefold(text)
    return any(_ascii_casefold(kw) in folded for kw in keywords)


def filter_corpus(docs: Iterable[Document], cfg: CorpusConfig) -> list[Document]:
    """Keep documents matching keywords, inside the interval, non-empty, deduped.

    Dedup (when enabled) drops any document whose exact text was already
    seen earlier in the same channel; the first occurrence wins. The output
    is a subsequence of the input, so the operation is idempotent.
    """
    cfg.validate()
    kept: list[Document] = []
    seen_text: set[tuple[str, str]] = set()
    for doc in docs:
        if not doc.text:
            continue
        if not cfg.interval_start <= doc.timestamp < cfg.interval_end:
            continue
        if not _matches_keywords(doc.text, cfg.keywords):
            continue
        if cfg.dedup:
            key = (doc.channel, doc.text)
            if key in seen_text:
                continue
            seen_text.add(key)
        kept.append(doc)
    return kept


def read_documents(path: str) -> tuple[list[Document], list[ParseDiagnostic]]:
    with open(path, "rb") as fh:
        return parse_jsonl(fh)


def write_documents(path: str, docs: Iterable[Document]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for doc in docs:
            fh.write(
                json.dumps(
                    {
                        "id": doc.id,
                        "timestamp": doc.timestamp,
                        "channel": doc.channel,
                        "text": doc.text,
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )
