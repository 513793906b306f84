from __future__ import annotations

import io
import json

import numpy as np
import pytest

from emoflow.corpus import (
    CorpusConfig,
    Document,
    filter_corpus,
    parse_jsonl,
    parse_timestamp,
    read_documents,
    write_documents,
)


def _stream(*lines: str) -> io.BytesIO:
    return io.BytesIO(("\n".join(lines) + "\n").encode("utf-8"))


def _cfg(**kwargs) -> CorpusConfig:
    defaults = dict(keywords=[], interval_start=0, interval_end=10_000, tz_offset_minutes=540, dedup=True)
    defaults.update(kwargs)
    return CorpusConfig(**defaults)


# ---------------------------------------------------------------------------
# parse_jsonl


def test_parse_single_record_epoch_zero():
    docs, diagnostics = parse_jsonl(_stream('{"id":"a","timestamp":0,"channel":"social","text":"x"}'))
    assert docs == [Document(id="a", timestamp=0, channel="social", text="x")]
    assert diagnostics == []


def test_parse_empty_stream():
    docs, diagnostics = parse_jsonl(io.BytesIO(b""))
    assert docs == []
    assert diagnostics == []


def test_parse_missing_field_is_diagnostic_not_drop():
    lines = [
        '{"id":"a","timestamp":0,"channel":"social","text":"x"}',
        '{"id":"b","timestamp":1,"channel":"social","text":"y"}',
        '{"id":"c","timestamp":2,"channel":"social"}',
        '{"id":"d","timestamp":3,"channel":"news","text":"z"}',
    ]
    docs, diagnostics = parse_jsonl(_stream(*lines))
    assert [d.id for d in docs] == ["a", "b", "d"]
    assert len(diagnostics) == 1
    assert diagnostics[0].line_no == 3
    assert "text" in diagnostics[0].reason


def test_parse_rfc3339_and_epoch_agree():
    lines = [
        '{"id":"a","timestamp":"2024-08-01T23:00:00Z","channel":"social","text":"x"}',
        '{"id":"b","timestamp":"2024-08-02T08:00:00+09:00","channel":"social","text":"x"}',
        '{"id":"c","timestamp":1722553200,"channel":"social","text":"x"}',
    ]
    docs, diagnostics = parse_jsonl(_stream(*lines))
    assert not diagnostics
    assert docs[0].timestamp == docs[1].timestamp == docs[2].timestamp == 1722553200


@pytest.mark.parametrize(
    "line, fragment",
    [
        ('{"id":"","timestamp":0,"channel":"social","text":"x"}', "non-empty"),
        ('{"id":"a","timestamp":0,"channel":"mail","text":"x"}', "channel"),
        ('{"id":"a","timestamp":"2024-08-01 12:00:00","channel":"social","text":"x"}', "offset"),
        ('{"id":"a","timestamp":0.5,"channel":"social","text":"x"}', "timestamp"),
        ('{"id":"a","timestamp":true,"channel":"social","text":"x"}', "timestamp"),
        ('{"id":"a","timestamp":0,"channel":"social","text":3}', "text"),
        ("[1, 2, 3]", "object"),
        ("{not json", "JSON"),
    ],
)
def test_parse_malformed_records(line, fragment):
    docs, diagnostics = parse_jsonl(_stream(line))
    assert docs == []
    assert len(diagnostics) == 1
    assert fragment in diagnostics[0].reason


def test_parse_duplicate_channel_id_keeps_first():
    lines = [
        '{"id":"a","timestamp":0,"channel":"social","text":"first"}',
        '{"id":"a","timestamp":1,"channel":"social","text":"second"}',
        '{"id":"a","timestamp":2,"channel":"news","text":"other channel ok"}',
    ]
    docs, diagnostics = parse_jsonl(_stream(*lines))
    assert [(d.channel, d.text) for d in docs] == [("social", "first"), ("news", "other channel ok")]
    assert len(diagnostics) == 1
    assert "duplicate" in diagnostics[0].reason


def test_parse_ignores_unknown_keys_and_blank_lines():
    docs, diagnostics = parse_jsonl(
        _stream('{"id":"a","timestamp":0,"channel":"social","text":"x","extra":1}', "", "  ")
    )
    assert len(docs) == 1
    assert not diagnostics


def test_parse_timestamp_rejects_naive_strings():
    with pytest.raises(ValueError):
        parse_timestamp("2024-08-01T12:00:00")


# ---------------------------------------------------------------------------
# filter_corpus


def _doc(i: int, text: str, channel: str = "social", ts: int = 100) -> Document:
    return Document(id=f"d{i}", timestamp=ts, channel=channel, text=text)


def test_filter_keyword_substring_match():
    docs = [_doc(0, "the rice shortage is real"), _doc(1, "nothing to see")]
    kept = filter_corpus(docs, _cfg(keywords=["rice shortage"]))
    assert [d.id for d in kept] == ["d0"]


def test_filter_keyword_ascii_case_insensitive_nonascii_verbatim():
    docs = [_doc(0, "Rice SHORTAGE again"), _doc(1, "米不足 です"), _doc(2, "米个足")]
    kept = filter_corpus(docs, _cfg(keywords=["rice shortage", "米不足"]))
    assert [d.id for d in kept] == ["d0", "d1"]


def test_filter_dedup_first_occurrence_wins():
    docs = [_doc(0, "same text"), _doc(1, "same text"), _doc(2, "same text", channel="news")]
    kept = filter_corpus(docs, _cfg())
    assert [(d.channel, d.id) for d in kept] == [("social", "d0"), ("news", "d2")]


def test_filter_dedup_disabled_keeps_duplicates():
    docs = [_doc(0, "same text"), _doc(1, "same text")]
    kept = filter_corpus(docs, _cfg(dedup=False))
    assert len(kept) == 2


def test_filter_interval_is_half_open():
    docs = [
        _doc(0, "early", ts=-1),
        _doc(1, "at start", ts=0),
        _doc(2, "inside", ts=5_000),
        _doc(3, "at end", ts=10_000),
    ]
    kept = filter_corpus(docs, _cfg())
    assert [d.id for d in kept] == ["d1", "d2"]


def test_filter_drops_empty_text():
    kept = filter_corpus([_doc(0, "")], _cfg())
    assert kept == []


def test_filter_empty_keyword_list_retains_everything():
    docs = [_doc(0, "anything"), _doc(1, "goes")]
    assert len(filter_corpus(docs, _cfg(keywords=[]))) == 2


def test_filter_idempotent_and_subsequence():
    rng = np.random.default_rng(2)
    texts = ["rice here", "no match", "rice rice", "RICE loud", "米不足"]
    docs = [
        Document(
            id=f"d{i}",
            timestamp=int(rng.integers(-100, 20_000)),
            channel="social" if rng.integers(2) else "news",
            text=texts[int(rng.integers(len(texts)))],
        )
        for i in range(300)
    ]
    cfg = _cfg(keywords=["rice"])
    once = filter_corpus(docs, cfg)
    twice = filter_corpus(once, cfg)
    assert once == twice
    assert len(once) <= len(docs)
    # Subsequence: retained docs appear in their original relative order.
    positions = {id(d): i for i, d in enumerate(docs)}
    kept_positions = [positions[id(d)] for d in once]
    assert kept_positions == sorted(kept_positions)


def test_config_validation():
    with pytest.raises(ValueError, match="interval_start"):
        _cfg(interval_start=5, interval_end=5).validate()
    with pytest.raises(ValueError, match="tz_offset_minutes"):
        _cfg(tz_offset_minutes=900).validate()


# ---------------------------------------------------------------------------
# file round trip


def test_document_file_round_trip(tmp_path):
    docs = [
        Document(id="a", timestamp=0, channel="social", text="日本語のポスト rice"),
        Document(id="b", timestamp=5, channel="news", text="plain"),
    ]
    path = tmp_path / "docs.jsonl"
    write_documents(str(path), docs)
    back, diagnostics = read_documents(str(path))
    assert back == docs
    assert not diagnostics
    # Round trip is byte-stable.
    first = path.read_bytes()
    write_documents(str(path), back)
    assert path.read_bytes() == first


def test_write_documents_is_valid_jsonl(tmp_path):
    path = tmp_path / "docs.jsonl"
    write_documents(str(path), [Document(id="a", timestamp=0, channel="social", text="x")])
    record = json.loads(path.read_text().strip())
    assert set(record) == {"id", "timestamp", "channel", "text"}
