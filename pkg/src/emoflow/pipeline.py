"""Pipeline orchestration: ingest -> score -> aggregate -> te -> plot.

Each stage reads the previous stage's artifacts from the output directory
and writes its own, so chaining the stage subcommands reproduces
``run_pipeline`` bit for bit. All artifacts are deterministic for a fixed
config + inputs + seed; ``run_pipeline`` finishes by writing a manifest of
content hashes.

In every report the x role is the social channel and the y role is news:
``te_x_to_y_bits`` measures social-to-news influence.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from datetime import date, timedelta
from pathlib import Path

import numpy as np

from emoflow import corpus, infoflow, plotting, scoring, timeseries
from emoflow.corpus import CorpusConfig, Document
from emoflow.emotions import EMOTIONS, N_EMOTIONS, PALETTE, emotion_index
from emoflow.infoflow import BinningSpec, SignificanceResult, TEResult
from emoflow.scoring import ScoredDocument

CHANNELS = ("social", "news")

FILTERED = {ch: f"filtered_{ch}.jsonl" for ch in CHANNELS}
SCORED = {ch: f"scored_{ch}.jsonl" for ch in CHANNELS}
DAILY = {ch: f"daily_{ch}.csv" for ch in CHANNELS}
SMOOTHED = {ch: f"smoothed_{ch}.csv" for ch in CHANNELS}
INGEST_REPORT = "ingest_report.json"
SCORE_REPORT = "score_report.json"
VOLUME_DAILY = "volume_daily.csv"
VOLUME_SMOOTHED = "volume_smoothed.csv"
CROSSOVER_REPORT = "crossover.json"
TE_REPORT = "te_report.json"
MANIFEST = "manifest.json"


class ConfigError(Exception):
    """Invalid configuration or missing declared input; exits with code 2."""

    def __init__(self, message: str, path: str | None = None):
        super().__init__(message)
        self.path = path


class PipelineError(Exception):
    """Stage failure at run time; exits with code 3."""

    def __init__(self, message: str, path: str | None = None):
        super().__init__(message)
        self.path = path


@dataclass
class ScorerConfig:
    lexicon: str | None = None
    external: list[str] | None = None
    smoothing_mass: float = 1.0
    timeout: float = 60.0


@dataclass
class SignificanceConfig:
    enabled: bool = False
    n_surrogates: int = 99
    seed: int = 0


@dataclass
class PipelineConfig:
    social: str
    news: str
    scorer: ScorerConfig
    corpus: CorpusConfig
    out_dir: str
    window: int = 7
    window_alignment: str = "trailing"
    binning: BinningSpec = field(default_factory=BinningSpec)
    lag: int = 1
    te_input: str = "daily"
    windows: list[tuple[date, date]] = field(default_factory=list)
    window_binning: str = "per_window"
    significance: SignificanceConfig = field(default_factory=SignificanceConfig)
    crossover: tuple[str, str] = ("fear", "anticipation")

    def validate(self) -> None:
        if (self.scorer.lexicon is None) == (self.scorer.external is None):
            raise ConfigError("exactly one scorer must be selected (lexicon or external)")
        try:
            self.corpus.validate()
            self.binning.validate()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.window < 1:
            raise ConfigError("window must be >= 1")
        if self.window_alignment not in ("trailing", "centered"):
            raise ConfigError("window_alignment must be 'trailing' or 'centered'")
        if self.lag < 1:
            raise ConfigError("lag must be >= 1")
        if self.te_input not in ("daily", "smoothed"):
            raise ConfigError("te_input must be 'daily' or 'smoothed'")
        if self.window_binning not in ("per_window", "global"):
            raise ConfigError("window_binning must be 'per_window' or 'global'")
        for name in self.crossover:
            emotion_index(name)
        previous_end: date | None = None
        for start, end in self.windows:
            if start > end:
                raise ConfigError(f"window {start} .. {end} is reversed")
            if previous_end is not None and start <= previous_end:
                raise ConfigError("windows must be ordered and non-overlapping")
            previous_end = end
        for path_attr in ("social", "news"):
            path = getattr(self, path_attr)
            if not Path(path).is_file():
                raise ConfigError(f"missing input file: {path}", path=path)
        if self.scorer.lexicon is not None and not Path(self.scorer.lexicon).is_file():
            raise ConfigError(f"missing lexicon file: {self.scorer.lexicon}", path=self.scorer.lexicon)
        try:
            Path(self.out_dir).mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise ConfigError(f"output directory not writable: {exc}", path=self.out_dir) from None

    def out_path(self, name: str) -> Path:
        return Path(self.out_dir) / name


def _resolve(base: Path, value: str) -> str:
    path = Path(value)
    return str(path if path.is_absolute() else base / path)


def load_config(path: str | Path, overrides: dict | None = None) -> PipelineConfig:
    """Load a JSON pipeline config; relative paths resolve against the file."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"missing config file: {path}", path=str(path))
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc.msg}", path=str(path)) from None
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object", path=str(path))
    overrides = overrides or {}
    base = path.parent

    def req(key: str):
        if key not in raw:
            raise ConfigError(f"config lacks required key {key!r}", path=str(path))
        return raw[key]

    scorer_raw = req("scorer")
    scorer = ScorerConfig(
        lexicon=_resolve(base, scorer_raw["lexicon"]) if "lexicon" in scorer_raw else None,
        external=list(scorer_raw["external"]) if "external" in scorer_raw else None,
        smoothing_mass=float(scorer_raw.get("smoothing_mass", 1.0)),
        timeout=float(scorer_raw.get("timeout", 60.0)),
    )

    try:
        interval_start = corpus.parse_timestamp(req("interval_start"))
        interval_end = corpus.parse_timestamp(req("interval_end"))
    except ValueError as exc:
        raise ConfigError(str(exc), path=str(path)) from None

    corpus_cfg = CorpusConfig(
        keywords=list(raw.get("keywords", [])),
        interval_start=interval_start,
        interval_end=interval_end,
        tz_offset_minutes=int(raw.get("tz_offset_minutes", 540)),
        dedup=bool(raw.get("dedup", True)),
    )

    range_policy = raw.get("range_policy", "per_series_min_max")
    if range_policy == "per_series_min_max":
        fixed_range = None
    elif isinstance(range_policy, dict) and "fixed" in range_policy:
        lo, hi = range_policy["fixed"]
        fixed_range = (float(lo), float(hi))
    else:
        raise ConfigError(
            "range_policy must be 'per_series_min_max' or {\"fixed\": [lo, hi]}", path=str(path)
        )
    binning = BinningSpec(n_bins=int(overrides.get("bins", raw.get("bins", 3))), fixed_range=fixed_range)

    windows: list[tuple[date, date]] = []
    for pair in raw.get("windows", []):
        try:
            start, end = (date.fromisoformat(p) for p in pair)
        except (TypeError, ValueError):
            raise ConfigError(f"bad TE window {pair!r}; expected [YYYY-MM-DD, YYYY-MM-DD]", path=str(path)) from None
        windows.append((start, end))

    sig_raw = raw.get("significance", {})
    significance = SignificanceConfig(
        enabled=bool(sig_raw.get("enabled", False)),
        n_surrogates=int(sig_raw.get("n_surrogates", 99)),
        seed=int(overrides.get("seed", sig_raw.get("seed", 0))),
    )

    crossover_raw = raw.get("crossover", ["fear", "anticipation"])
    if len(crossover_raw) != 2:
        raise ConfigError("crossover must name exactly two emotions", path=str(path))

    cfg = PipelineConfig(
        social=_resolve(base, req("social")),
        news=_resolve(base, req("news")),
        scorer=scorer,
        corpus=corpus_cfg,
        out_dir=str(overrides.get("out", _resolve(base, raw.get("out_dir", "out")))),
        window=int(overrides.get("window", raw.get("window", 7))),
        window_alignment=str(raw.get("window_alignment", "trailing")),
        binning=binning,
        lag=int(overrides.get("lag", raw.get("lag", 1))),
        te_input=str(raw.get("te_input", "daily")),
        windows=windows,
        window_binning=str(raw.get("window_binning", "per_window")),
        significance=significance,
        crossover=(str(crossover_raw[0]), str(crossover_raw[1])),
    )
    cfg.validate()
    return cfg


# ---------------------------------------------------------------------------
# Artifact I/O helpers


def _require_artifact(cfg: PipelineConfig, name: str) -> Path:
    path = cfg.out_path(name)
    if not path.is_file():
        raise PipelineError(f"missing artifact: {path}", path=str(path))
    return path


def _write_json(path: Path, payload: object) -> None:
    path.write_text(json.dumps(payload, indent=2, ensure_ascii=False, sort_keys=True) + "\n", encoding="utf-8")


def write_scored_jsonl(path: Path, scored: list[ScoredDocument]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for item in scored:
            channel, doc_id = item.document_ref
            fh.write(
                json.dumps(
                    {
                        "id": doc_id,
                        "channel": channel,
                        "timestamp": item.timestamp,
                        "scores": {name: float(item.scores[i]) for i, name in enumerate(EMOTIONS)},
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )


def read_scored_jsonl(path: Path) -> list[ScoredDocument]:
    scored = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            vec = np.array([record["scores"][name] for name in EMOTIONS], dtype=float)
            scored.append(
                ScoredDocument(
                    document_ref=(record["channel"], record["id"]),
                    timestamp=int(record["timestamp"]),
                    scores=vec,
                )
            )
    return scored


# ---------------------------------------------------------------------------
# Stages


def stage_ingest(cfg: PipelineConfig) -> None:
    """Parse, filter, and dedup both corpora; write filtered JSONL + a report."""
    Path(cfg.out_dir).mkdir(parents=True, exist_ok=True)
    report: dict[str, dict] = {}
    for channel, source in (("social", cfg.social), ("news", cfg.news)):
        try:
            docs, diagnostics = corpus.read_documents(source)
        except OSError as exc:
            raise PipelineError(f"cannot read {source}: {exc}", path=source) from None
        wrong = [d for d in docs if d.channel != channel]
        if wrong:
            raise PipelineError(
                f"{source}: {len(wrong)} document(s) tagged {wrong[0].channel!r}; expected {channel!r}"
            )
        kept = corpus.filter_corpus(docs, cfg.corpus)
        corpus.write_documents(str(cfg.out_path(FILTERED[channel])), kept)
        report[channel] = {
            "parsed": len(docs),
            "diagnostics": len(diagnostics),
            "diagnostic_lines": [[d.line_no, d.reason] for d in diagnostics],
            "retained": len(kept),
        }
    _write_json(cfg.out_path(INGEST_REPORT), report)


def _load_filtered(cfg: PipelineConfig, channel: str) -> list[Document]:
    path = _require_artifact(cfg, FILTERED[channel])
    docs, diagnostics = corpus.read_documents(str(path))
    if diagnostics:
        raise PipelineError(f"{path}: filtered artifact is corrupt ({len(diagnostics)} bad line(s))")
    return docs


def stage_score(cfg: PipelineConfig) -> None:
    """Score filtered documents with the configured scorer."""
    docs = {ch: _load_filtered(cfg, ch) for ch in CHANNELS}
    report: dict[str, dict] = {}
    if cfg.scorer.lexicon is not None:
        lexicon = scoring.load_lexicon(cfg.scorer.lexicon, cfg.scorer.smoothing_mass)
        for channel in CHANNELS:
            scored = scoring.score_documents_lexicon(docs[channel], lexicon)
            write_scored_jsonl(cfg.out_path(SCORED[channel]), scored)
            report[channel] = {"scored": len(scored), "errors": []}
    else:
        scorer = scoring.ExternalScorer(cfg.scorer.external, timeout=cfg.scorer.timeout)
        merged = docs["social"] + docs["news"]
        try:
            scored, errors = scorer.score(merged)
        except scoring.ScorerProcessError as exc:
            raise PipelineError(f"external scorer failed: {exc}") from None
        by_channel: dict[str, list[ScoredDocument]] = {ch: [] for ch in CHANNELS}
        for item in scored:
            by_channel[item.document_ref[0]].append(item)
        error_refs: dict[str, list[list[str]]] = {ch: [] for ch in CHANNELS}
        for err in errors:
            error_refs[err.document_ref[0]].append([err.document_ref[1], err.reason])
        for channel in CHANNELS:
            write_scored_jsonl(cfg.out_path(SCORED[channel]), by_channel[channel])
            report[channel] = {"scored": len(by_channel[channel]), "errors": error_refs[channel]}
    _write_json(cfg.out_path(SCORE_REPORT), report)


def _crossover_entry(smoothed: timeseries.SmoothedSeries, a: int, b: int) -> dict:
    event = timeseries.detect_crossover(smoothed, a, b)
    if event is not None:
        return {
            "status": "crossed",
            "day": event.day.isoformat(),
            "pre_gap": event.pre_gap,
            "post_gap": event.post_gap,
        }
    if timeseries.is_pre_crossed(smoothed, a, b):
        return {"status": "pre_crossed"}
    return {"status": "none"}


def stage_aggregate(cfg: PipelineConfig) -> None:
    """Build daily/smoothed emotion series, volume series, and the crossover report."""
    smoothed_by_channel: dict[str, timeseries.SmoothedSeries] = {}
    volumes: dict[str, tuple[timeseries.DailyCounts, timeseries.SmoothedSeries]] = {}
    for channel in CHANNELS:
        scored = read_scored_jsonl(_require_artifact(cfg, SCORED[channel]))
        daily = timeseries.aggregate_daily(scored, cfg.corpus)
        timeseries.write_daily_csv(str(cfg.out_path(DAILY[channel])), daily)

        smoothed = timeseries.smooth_daily(daily, cfg.window, cfg.window_alignment)
        counts = timeseries.smooth_counts(daily.start_day, daily.counts, cfg.window, cfg.window_alignment)
        if len(smoothed) == 0:
            raise PipelineError(
                f"interval spans {len(daily)} day(s); too short for a {cfg.window}-day window"
            )
        timeseries.write_smoothed_csv(str(cfg.out_path(SMOOTHED[channel])), smoothed, counts)
        smoothed_by_channel[channel] = smoothed

        filtered = _load_filtered(cfg, channel)
        volumes[channel] = timeseries.volume_series(filtered, cfg.corpus, cfg.window, cfg.window_alignment)

    _write_volume_csvs(cfg, volumes)

    a, b = (emotion_index(name) for name in cfg.crossover)
    entries = {ch: _crossover_entry(smoothed_by_channel[ch], a, b) for ch in CHANNELS}
    crossed_days = {
        ch: date.fromisoformat(entry["day"]) for ch, entry in entries.items() if entry["status"] == "crossed"
    }
    if len(crossed_days) == 2:
        if crossed_days["social"] < crossed_days["news"]:
            earlier = "social"
        elif crossed_days["news"] < crossed_days["social"]:
            earlier = "news"
        else:
            earlier = "tie"
    else:
        earlier = None
    _write_json(
        cfg.out_path(CROSSOVER_REPORT),
        {
            "emotion_a": cfg.crossover[0],
            "emotion_b": cfg.crossover[1],
            "channels": entries,
            "earlier_channel": earlier,
        },
    )


def _write_volume_csvs(
    cfg: PipelineConfig, volumes: dict[str, tuple[timeseries.DailyCounts, timeseries.SmoothedSeries]]
) -> None:
    daily_social, smoothed_social = volumes["social"]
    daily_news, smoothed_news = volumes["news"]
    with open(cfg.out_path(VOLUME_DAILY), "w", encoding="utf-8", newline="\n") as fh:
        fh.write("day,social,news\n")
        for i, day in enumerate(daily_social.days()):
            fh.write(f"{day.isoformat()},{int(daily_social.counts[i])},{int(daily_news.counts[i])}\n")
    with open(cfg.out_path(VOLUME_SMOOTHED), "w", encoding="utf-8", newline="\n") as fh:
        fh.write("day,social,news\n")
        for i, day in enumerate(smoothed_social.days()):
            fh.write(f"{day.isoformat()},{smoothed_social.values[i]:.6f},{smoothed_news.values[i]:.6f}\n")


def _te_input_series(cfg: PipelineConfig) -> tuple[list[date], np.ndarray, np.ndarray]:
    """Aligned (days, social matrix, news matrix) for the configured TE input."""
    if cfg.te_input == "daily":
        social = timeseries.read_daily_csv(str(_require_artifact(cfg, DAILY["social"])))
        news = timeseries.read_daily_csv(str(_require_artifact(cfg, DAILY["news"])))
        return social.days(), social.imputed_means(), news.imputed_means()
    social_s, _ = timeseries.read_smoothed_csv(str(_require_artifact(cfg, SMOOTHED["social"])), cfg.window)
    news_s, _ = timeseries.read_smoothed_csv(str(_require_artifact(cfg, SMOOTHED["news"])), cfg.window)
    return social_s.days(), social_s.values, news_s.values


def stage_te(cfg: PipelineConfig) -> None:
    """Bidirectional per-emotion TE (full span plus configured windows)."""
    days, social, news = _te_input_series(cfg)
    day_index = {d: i for i, d in enumerate(days)}
    span = (days[0].isoformat(), days[-1].isoformat())

    sub_seeds = _significance_seeds(cfg, n_windows=len(cfg.windows))

    results: list[TEResult] = []
    for e in range(N_EMOTIONS):
        result = infoflow.bidirectional_te(social[:, e], news[:, e], cfg.binning, cfg.lag)
        result = replace(result, emotion=e, window=span)
        if cfg.significance.enabled:
            sig = infoflow.permutation_significance(
                social[:, e], news[:, e], cfg.binning, cfg.lag,
                cfg.significance.n_surrogates, sub_seeds[("full", e)],
            )
            result = infoflow.attach_significance(result, sig)
        results.append(result)

    if cfg.windows:
        index_windows = []
        for start, end in cfg.windows:
            if start not in day_index or end not in day_index:
                raise PipelineError(f"TE window {start} .. {end} falls outside the series span")
            index_windows.append((day_index[start], day_index[end]))
        rebin = cfg.window_binning == "per_window"
        # One call per window keeps (window, emotion) labels aligned even
        # when a too-short window is skipped with a diagnostic.
        for w_i, ((start, end), (lo, hi)) in enumerate(zip(cfg.windows, index_windows)):
            for e in range(N_EMOTIONS):
                windowed, _ = infoflow.windowed_te(
                    social[:, e], news[:, e], [(lo, hi)], cfg.binning, cfg.lag, rebin_per_window=rebin
                )
                if not windowed:
                    continue
                result = replace(windowed[0], emotion=e, window=(start.isoformat(), end.isoformat()))
                if cfg.significance.enabled:
                    sig = infoflow.permutation_significance(
                        social[lo : hi + 1, e], news[lo : hi + 1, e], cfg.binning, cfg.lag,
                        cfg.significance.n_surrogates, sub_seeds[(w_i, e)],
                    )
                    result = infoflow.attach_significance(result, sig)
                results.append(result)

    cfg.out_path(TE_REPORT).write_text(infoflow.te_report_json(results), encoding="utf-8")


def _significance_seeds(cfg: PipelineConfig, n_windows: int) -> dict[tuple, int]:
    """Derive one child seed per (window, emotion) in a fixed order."""
    rng = np.random.default_rng(cfg.significance.seed)
    seeds: dict[tuple, int] = {}
    for e in range(N_EMOTIONS):
        seeds[("full", e)] = int(rng.integers(0, 2**63))
    for w in range(n_windows):
        for e in range(N_EMOTIONS):
            seeds[(w, e)] = int(rng.integers(0, 2**63))
    return seeds


def stage_plot(cfg: PipelineConfig) -> list[str]:
    """Render every SVG artifact; returns the file names written."""
    written: list[str] = []

    smoothed = {}
    for channel in CHANNELS:
        emotions_series, _ = timeseries.read_smoothed_csv(
            str(_require_artifact(cfg, SMOOTHED[channel])), cfg.window
        )
        smoothed[channel] = emotions_series

    for channel in CHANNELS:
        series = [
            timeseries.SmoothedSeries(
                window=cfg.window,
                first_day=smoothed[channel].first_day,
                values=smoothed[channel].values[:, e],
            )
            for e in range(N_EMOTIONS)
        ]
        spec = plotting.PlotSpec(
            kind="timeseries_lines",
            title=f"Smoothed emotion scores ({channel})",
            labels=EMOTIONS,
            colors=PALETTE,
        )
        name = f"emotions_{channel}.svg"
        cfg.out_path(name).write_bytes(plotting.render_timeseries_svg(series, spec))
        written.append(name)

    volume_path = _require_artifact(cfg, VOLUME_SMOOTHED)
    days: list[date] = []
    social_vals: list[float] = []
    news_vals: list[float] = []
    with open(volume_path, "r", encoding="utf-8") as fh:
        next(fh)
        for line in fh:
            day_s, social_s, news_s = line.strip().split(",")
            days.append(date.fromisoformat(day_s))
            social_vals.append(float(social_s))
            news_vals.append(float(news_s))
    if not days:
        raise PipelineError(f"{volume_path}: no data rows")
    volume_series = [
        timeseries.SmoothedSeries(cfg.window, days[0], np.array(social_vals)),
        timeseries.SmoothedSeries(cfg.window, days[0], np.array(news_vals)),
    ]
    spec = plotting.PlotSpec(
        kind="timeseries_lines",
        title="Smoothed document volume",
        labels=("social", "news"),
        colors=("#1f77b4", "#2ca02c"),
    )
    cfg.out_path("volume.svg").write_bytes(plotting.render_timeseries_svg(volume_series, spec))
    written.append("volume.svg")

    te_path = _require_artifact(cfg, TE_REPORT)
    results = infoflow.te_report_from_json(te_path.read_text(encoding="utf-8"))
    by_window: dict[tuple[str, str], list[TEResult]] = {}
    for r in results:
        by_window.setdefault(r.window, []).append(r)
    bar_labels = ("social to news", "news to social")
    for w_i, (window, group) in enumerate(by_window.items()):
        title = f"Transfer entropy by emotion ({window[0]} .. {window[1]})"
        name = "te_full.svg" if w_i == 0 else f"te_window_{w_i}.svg"
        spec = plotting.PlotSpec(kind="grouped_bars", title=title, labels=bar_labels)
        cfg.out_path(name).write_bytes(plotting.render_te_bars_svg(group, spec))
        written.append(name)
    return written


def _manifest_entries(cfg: PipelineConfig, names: list[str]) -> list[dict]:
    entries = []
    for name in sorted(names):
        data = cfg.out_path(name).read_bytes()
        entries.append({"path": name, "sha256": hashlib.sha256(data).hexdigest(), "bytes": len(data)})
    return entries


def run_pipeline(cfg: PipelineConfig) -> dict:
    """Run every stage and write a content-hash manifest of all artifacts."""
    cfg.validate()
    stage_ingest(cfg)
    stage_score(cfg)
    stage_aggregate(cfg)
    stage_te(cfg)
    plot_names = stage_plot(cfg)

    names = [
        *FILTERED.values(),
        INGEST_REPORT,
        *SCORED.values(),
        SCORE_REPORT,
        *DAILY.values(),
        *SMOOTHED.values(),
        VOLUME_DAILY,
        VOLUME_SMOOTHED,
        CROSSOVER_REPORT,
        TE_REPORT,
        *plot_names,
    ]
    manifest = {"artifacts": _manifest_entries(cfg, names)}
    _write_json(cfg.out_path(MANIFEST), manifest)
    return manifest
