from __future__ import annotations

import json
from datetime import datetime, timedelta, timezone
from pathlib import Path
from types import SimpleNamespace

import pytest

from emoflow import pipeline, synthetic

TZ9 = timezone(timedelta(hours=9))
MINI_START = datetime(2024, 8, 1, tzinfo=TZ9)
MINI_DAYS = 16

EMOTION_TOKENS = synthetic.EMOTION_TOKENS


def write_mini_corpus(root: Path, scorer: dict | None = None, **config_extra) -> Path:
    """Tiny deterministic two-channel corpus: social flips from fear-words to
    anticipation-words mid-span, news stays on fear-words throughout."""
    root.mkdir(parents=True, exist_ok=True)
    start_epoch = int(MINI_START.timestamp())

    def lines(channel: str, per_day: int, token_for_day) -> str:
        rows = []
        serial = 0
        for day in range(MINI_DAYS):
            for i in range(per_day):
                token = token_for_day(day, i)
                rows.append(
                    json.dumps(
                        {
                            "id": f"{channel}-{serial:04d}",
                            "timestamp": start_epoch + day * 86400 + i * 3600,
                            "channel": channel,
                            "text": f"shortage {token} {token} m{serial:04d}",
                        }
                    )
                )
                serial += 1
        return "\n".join(rows) + "\n"

    social_token = lambda day, i: EMOTION_TOKENS["fear"] if day < 8 else EMOTION_TOKENS["anticipation"]
    news_token = lambda day, i: EMOTION_TOKENS["fear"] if (day + i) % 8 else EMOTION_TOKENS["joy"]
    (root / "social.jsonl").write_text(lines("social", 4, social_token))
    (root / "news.jsonl").write_text(lines("news", 3, news_token))

    lexicon = {}
    for e, name in enumerate(EMOTION_TOKENS):
        weights = [0.0] * 8
        weights[e] = 5.0
        lexicon[EMOTION_TOKENS[name]] = weights
    (root / "lexicon.json").write_text(json.dumps(lexicon))

    config = {
        "social": "social.jsonl",
        "news": "news.jsonl",
        "scorer": scorer if scorer is not None else {"lexicon": "lexicon.json"},
        "keywords": ["shortage"],
        "interval_start": MINI_START.isoformat(),
        "interval_end": (MINI_START + timedelta(days=MINI_DAYS)).isoformat(),
        "tz_offset_minutes": 540,
        "dedup": True,
        "window": 7,
        "bins": 3,
        "lag": 1,
        "te_input": "daily",
        "windows": [],
        "significance": {"enabled": False, "n_surrogates": 29, "seed": 5},
        "crossover": ["fear", "anticipation"],
        "out_dir": "out",
    }
    config.update(config_extra)
    path = root / "config.json"
    path.write_text(json.dumps(config, indent=2))
    return path


@pytest.fixture()
def mini_config(tmp_path) -> Path:
    return write_mini_corpus(tmp_path)


@pytest.fixture(scope="session")
def driver_run(tmp_path_factory) -> SimpleNamespace:
    root = tmp_path_factory.mktemp("driver_fixture")
    config_path = synthetic.make_driver_fixture(root, seed=2024)
    cfg = pipeline.load_config(config_path)
    manifest = pipeline.run_pipeline(cfg)
    return SimpleNamespace(root=root, config_path=config_path, cfg=cfg, manifest=manifest)


@pytest.fixture(scope="session")
def reversal_run(tmp_path_factory) -> SimpleNamespace:
    root = tmp_path_factory.mktemp("reversal_fixture")
    config_path = synthetic.make_reversal_fixture(root, seed=2024)
    cfg = pipeline.load_config(config_path)
    manifest = pipeline.run_pipeline(cfg)
    return SimpleNamespace(root=root, config_path=config_path, cfg=cfg, manifest=manifest)
