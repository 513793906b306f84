"""Synthetic two-channel corpora with a known direction of influence.

Both fixtures share the same construction: each channel has a latent daily
emotion state on the 8-simplex (softmax of slowly trending base levels plus
AR(1) innovations), and each document expresses one emotion sampled from
that day's state, so the lexicon scorer recovers the state up to sampling
noise.

driver fixture
    The social channel innovates freely; the news channel replays the
    social state with a 3-day lag plus small independent noise. Fear starts
    dominant and decays while anticipation rises, so the two moving
    averages cross, earlier on the social channel.

reversal fixture
    The coupling direction flips mid-span: social drives news in the first
    half, news drives social in the second. The bundled config carries the
    two halves as analysis windows.

Everything is deterministic for a given seed. The generator also plants a
little chaff (off-topic texts, out-of-interval posts, duplicate texts, and
malformed lines) so ingest filtering has real work to do.
"""
from __future__ import annotations

import json
from datetime import datetime, timedelta, timezone
from pathlib import Path

import numpy as np

from emoflow.emotions import EMOTIONS, N_EMOTIONS

EMOTION_TOKENS = {
    "fear": "dread",
    "sadness": "gloom",
    "surprise": "startle",
    "anticipation": "hopeful",
    "joy": "delight",
    "anger": "fury",
    "disgust": "revulsion",
    "trust": "faith",
}

KEYWORD = "shortage"
TOKEN_WEIGHT = 5.0

_TZ9 = timezone(timedelta(hours=9))


def _softmax(logits: np.ndarray) -> np.ndarray:
    z = np.exp(logits - logits.max(axis=-1, keepdims=True))
    return z / z.sum(axis=-1, keepdims=True)


def _ar_states(
    rng: np.random.Generator,
    n_days: int,
    base: np.ndarray,
    rho: float = 0.5,
    sigma: float = 0.55,
) -> np.ndarray:
    """Daily simplex states: softmax(base(t) + AR(1) noise), shape (n_days, 8)."""
    latent = np.zeros(N_EMOTIONS)
    states = np.empty((n_days, N_EMOTIONS))
    for t in range(n_days):
        latent = rho * latent + sigma * rng.standard_normal(N_EMOTIONS)
        states[t] = _softmax(base[t] + latent)
    return states


def _follow(rng: np.random.Generator, leader: np.ndarray, lag: int, sigma: float = 0.12) -> np.ndarray:
    """Replay leader states ``lag`` days late with small multiplicative noise."""
    n_days = leader.shape[0]
    follower = np.empty_like(leader)
    for t in range(n_days):
        src = leader[max(0, t - lag)]
        perturbed = src * np.exp(sigma * rng.standard_normal(N_EMOTIONS))
        follower[t] = perturbed / perturbed.sum()
    return follower


def _trending_base(n_days: int) -> np.ndarray:
    """Base logits: fear decays, anticipation rises, the rest sit at fixed offsets."""
    tau = np.linspace(0.0, 1.0, n_days)
    base = np.zeros((n_days, N_EMOTIONS))
    base[:, 0] = 1.3 - 2.6 * tau  # fear
    base[:, 3] = -1.3 + 2.6 * tau  # anticipation
    base[:, 1] = 0.15  # sadness
    base[:, 2] = -0.25  # surprise
    base[:, 4] = -0.10  # joy
    base[:, 5] = 0.05  # anger
    base[:, 6] = -0.30  # disgust
    base[:, 7] = -0.15  # trust
    return base


def _flat_base(n_days: int) -> np.ndarray:
    base = np.zeros((n_days, N_EMOTIONS))
    base[:] = np.array([0.3, 0.15, -0.25, 0.1, -0.1, 0.05, -0.3, -0.15])
    return base


def _volume(n_days: int, peak_day: float, base: float, height: float, width: float) -> np.ndarray:
    d = np.arange(n_days)
    return base + height * np.exp(-(((d - peak_day) / width) ** 2))


def _doc_lines(
    rng: np.random.Generator,
    channel: str,
    states: np.ndarray,
    volumes: np.ndarray,
    start_epoch: int,
) -> list[str]:
    lines: list[str] = []
    serial = 0
    for day, state in enumerate(states):
        n_docs = int(max(8, round(volumes[day] + rng.integers(-3, 4))))
        day_epoch = start_epoch + day * 86400
        emotions = rng.choice(N_EMOTIONS, size=n_docs, p=state)
        for i in range(n_docs):
            token = EMOTION_TOKENS[EMOTIONS[int(emotions[i])]]
            text = f"{KEYWORD} {token} {token} {token} n{serial:06d}"
            epoch = day_epoch + (i * 86400) // (n_docs + 1)
            lines.append(
                json.dumps(
                    {"id": f"{channel}-{serial:06d}", "timestamp": int(epoch), "channel": channel, "text": text},
                    ensure_ascii=False,
                )
            )
            serial += 1
    return lines


def _chaff_lines(channel: str, start_epoch: int, end_epoch: int) -> list[str]:
    def record(suffix: str, epoch: int, text: str) -> str:
        return json.dumps(
            {"id": f"{channel}-chaff-{suffix}", "timestamp": epoch, "channel": channel, "text": text},
            ensure_ascii=False,
        )

    return [
        record("early", start_epoch - 4000, f"{KEYWORD} posted before the window opens"),
        record("late", end_epoch + 4000, f"{KEYWORD} posted after the window closes"),
        record("offtopic", start_epoch + 5000, "completely unrelated chatter"),
        record("dupe", start_epoch + 6000, f"{KEYWORD} dread dread dread n000000"),
        "this line is not json {",
        json.dumps({"id": f"{channel}-nofield", "timestamp": start_epoch + 7000, "channel": channel}),
    ]


def _write_lexicon(path: Path) -> None:
    entries = {}
    for i, name in enumerate(EMOTIONS):
        weights = [0.0] * N_EMOTIONS
        weights[i] = TOKEN_WEIGHT
        entries[EMOTION_TOKENS[name]] = weights
    path.write_text(json.dumps(entries, indent=2) + "\n", encoding="utf-8")


def _write_config(path: Path, n_days: int, lag: int, windows: list[list[str]], significance_seed: int) -> None:
    start = datetime(2024, 6, 1, tzinfo=_TZ9)
    config = {
        "social": "social.jsonl",
        "news": "news.jsonl",
        "scorer": {"lexicon": "lexicon.json"},
        "keywords": [KEYWORD],
        "interval_start": start.isoformat(),
        "interval_end": (start + timedelta(days=n_days)).isoformat(),
        "tz_offset_minutes": 540,
        "dedup": True,
        "window": 7,
        "window_alignment": "trailing",
        "bins": 3,
        "range_policy": "per_series_min_max",
        "lag": lag,
        "te_input": "daily",
        "windows": windows,
        "window_binning": "per_window",
        "significance": {"enabled": False, "n_surrogates": 99, "seed": significance_seed},
        "crossover": ["fear", "anticipation"],
        "out_dir": "out",
    }
    path.write_text(json.dumps(config, indent=2) + "\n", encoding="utf-8")


def _write_fixture(
    out_dir: str | Path,
    social_states: np.ndarray,
    news_states: np.ndarray,
    rng: np.random.Generator,
    n_days: int,
    lag: int,
    windows: list[list[str]],
    seed: int,
) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    start_epoch = int(datetime(2024, 6, 1, tzinfo=_TZ9).timestamp())
    end_epoch = start_epoch + n_days * 86400

    social_volume = _volume(n_days, peak_day=0.46 * n_days, base=150.0, height=160.0, width=0.1 * n_days)
    news_volume = _volume(n_days, peak_day=0.54 * n_days, base=120.0, height=130.0, width=0.11 * n_days)

    social_lines = _doc_lines(rng, "social", social_states, social_volume, start_epoch)
    news_lines = _doc_lines(rng, "news", news_states, news_volume, start_epoch)

    social_all = _chaff_lines("social", start_epoch, end_epoch)[:3] + social_lines + _chaff_lines("social", start_epoch, end_epoch)[3:]
    news_all = _chaff_lines("news", start_epoch, end_epoch)[:3] + news_lines + _chaff_lines("news", start_epoch, end_epoch)[3:]

    (out / "social.jsonl").write_text("\n".join(social_all) + "\n", encoding="utf-8")
    (out / "news.jsonl").write_text("\n".join(news_all) + "\n", encoding="utf-8")
    _write_lexicon(out / "lexicon.json")
    config_path = out / "config.json"
    _write_config(config_path, n_days, lag, windows, significance_seed=seed)
    return config_path


def make_driver_fixture(out_dir: str | Path, seed: int = 2024, n_days: int = 120, lag: int = 3) -> Path:
    """Social-drives-news corpus pair; returns the bundled config path."""
    rng = np.random.default_rng(seed)
    base = _trending_base(n_days)
    social_states = _ar_states(rng, n_days, base)
    news_states = _follow(rng, social_states, lag)
    return _write_fixture(out_dir, social_states, news_states, rng, n_days, lag, windows=[], seed=seed)


def make_reversal_fixture(out_dir: str | Path, seed: int = 2024, n_days: int = 160, lag: int = 3) -> Path:
    """Coupling flips mid-span: social leads the first half, news the second."""
    rng = np.random.default_rng(seed)
    half = n_days // 2
    base = _flat_base(n_days)

    social_states = np.empty((n_days, N_EMOTIONS))
    news_states = np.empty((n_days, N_EMOTIONS))

    # First half: social innovates, news follows at `lag`.
    leader = _ar_states(rng, half + lag, base[: half + lag])
    social_states[:half] = leader[:half]
    for t in range(half):
        src = leader[max(0, t - lag)]
        perturbed = src * np.exp(0.12 * rng.standard_normal(N_EMOTIONS))
        news_states[t] = perturbed / perturbed.sum()

    # Second half: news innovates (continuing from its last state), social follows.
    latent = np.log(np.clip(news_states[half - 1], 1e-9, None))
    latent -= latent.mean()
    for t in range(half, n_days):
        latent = 0.5 * latent + 0.55 * rng.standard_normal(N_EMOTIONS)
        news_states[t] = _softmax(base[t] + latent)
    for t in range(half, n_days):
        src = news_states[t - lag]
        perturbed = src * np.exp(0.12 * rng.standard_normal(N_EMOTIONS))
        social_states[t] = perturbed / perturbed.sum()

    start = datetime(2024, 6, 1, tzinfo=_TZ9).date()
    windows = [
        [start.isoformat(), (start + timedelta(days=half - 1)).isoformat()],
        [(start + timedelta(days=half)).isoformat(), (start + timedelta(days=n_days - 1)).isoformat()],
    ]
    return _write_fixture(out_dir, social_states, news_states, rng, n_days, lag, windows=windows, seed=seed)
