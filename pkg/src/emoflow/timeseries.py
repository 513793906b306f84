"""Daily aggregation of scored documents, moving averages, and crossovers.

Documents are bucketed into calendar days under the configured UTC offset.
Day gaps are kept explicitly (count 0, mean absent) so every series spans
the full analysis interval. Moving averages are trailing by default and
labeled by the window's last day.

CSV export schema: ``day,count,fear,sadness,surprise,anticipation,joy,
anger,disgust,trust`` with ISO 8601 dates and 6-decimal floats.
"""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from datetime import date, timedelta
from typing import Iterable, Sequence

import numpy as np

from emoflow.corpus import CorpusConfig, Document
from emoflow.emotions import EMOTIONS, N_EMOTIONS
from emoflow.scoring import ScoredDocument

logger = logging.getLogger(__name__)

_EPOCH_DAY = date(1970, 1, 1)

CSV_HEADER = ["day", "count", *EMOTIONS]


def day_of(epoch: int, tz_offset_minutes: int) -> date:
    """Calendar day an instant falls on under the given UTC offset."""
    day_index = (epoch + tz_offset_minutes * 60) // 86400
    return _EPOCH_DAY + timedelta(days=int(day_index))


@dataclass
class DailySeries:
    """Per-day document counts and mean emotion vectors.

    ``means`` is an ``(n_days, 8)`` array whose rows are NaN on days with
    count 0 (mean absent).
    """

    start_day: date
    counts: np.ndarray
    means: np.ndarray

    def __len__(self) -> int:
        return len(self.counts)

    def days(self) -> list[date]:
        return [self.start_day + timedelta(days=i) for i in range(len(self.counts))]

    def imputed_means(self) -> np.ndarray:
        """Means with absent days replaced by the uniform vector."""
        out = self.means.copy()
        absent = self.counts == 0
        out[absent] = 1.0 / N_EMOTIONS
        return out


@dataclass
class DailyCounts:
    start_day: date
    counts: np.ndarray

    def days(self) -> list[date]:
        return [self.start_day + timedelta(days=i) for i in range(len(self.counts))]


@dataclass
class SmoothedSeries:
    """Rolling-window means; ``values`` is ``(m,)`` or ``(m, 8)``.

    ``first_day`` labels the first emitted window (its last day for
    trailing alignment, its center day for centered alignment).
    """

    window: int
    first_day: date
    values: np.ndarray

    def __len__(self) -> int:
        return len(self.values)

    def days(self) -> list[date]:
        return [self.first_day + timedelta(days=i) for i in range(len(self.values))]


@dataclass(frozen=True)
class CrossoverEvent:
    """First day emotion ``b`` strictly exceeds ``a`` after a day of b <= a."""

    emotion_a: int
    emotion_b: int
    day: date
    pre_gap: float
    post_gap: float


def interval_days(cfg: CorpusConfig) -> tuple[date, int]:
    """Day span covered by the half-open analysis interval."""
    cfg.validate()
    first = day_of(cfg.interval_start, cfg.tz_offset_minutes)
    last = day_of(cfg.interval_end - 1, cfg.tz_offset_minutes)
    return first, (last - first).days + 1


def aggregate_daily(scored: Sequence[ScoredDocument], cfg: CorpusConfig) -> DailySeries:
    """Bucket scored documents into days and take component-wise mean vectors.

    Every document must fall inside the configured interval. Empty input
    yields an all-zero-count series spanning the whole interval.
    """
    start_day, n_days = interval_days(cfg)
    counts = np.zeros(n_days, dtype=np.int64)
    sums = np.zeros((n_days, N_EMOTIONS), dtype=float)
    for item in scored:
        day = day_of(item.timestamp, cfg.tz_offset_minutes)
        idx = (day - start_day).days
        if not 0 <= idx < n_days:
            raise ValueError(f"document {item.document_ref} falls outside the analysis interval")
        counts[idx] += 1
        sums[idx] += item.scores
    means = np.full((n_days, N_EMOTIONS), np.nan)
    present = counts > 0
    means[present] = sums[present] / counts[present, None]
    return DailySeries(start_day=start_day, counts=counts, means=means)


def rolling_mean(values: np.ndarray, window: int) -> np.ndarray:
    """Trailing moving average emitting full windows only.

    ``values`` may be ``(n,)`` or ``(n, k)``; output length is
    ``max(0, n - window + 1)``. A series shorter than the window yields an
    empty result (diagnostic logged), not an error.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    values = np.asarray(values, dtype=float)
    n = values.shape[0]
    if n < window:
        logger.warning("series of length %d is shorter than window %d; empty result", n, window)
        return values[:0].copy()
    sliding = np.lib.stride_tricks.sliding_window_view(values, window, axis=0)
    return sliding.mean(axis=-1)


def smooth_daily(daily: DailySeries, window: int, alignment: str = "trailing") -> SmoothedSeries:
    """Moving average of daily mean vectors; absent days contribute uniform."""
    values = rolling_mean(daily.imputed_means(), window)
    return SmoothedSeries(window=window, first_day=_window_label(daily.start_day, window, alignment), values=values)


def smooth_counts(start_day: date, counts: np.ndarray, window: int, alignment: str = "trailing") -> SmoothedSeries:
    """Moving average of per-day counts; absent days contribute 0."""
    values = rolling_mean(np.asarray(counts, dtype=float), window)
    return SmoothedSeries(window=window, first_day=_window_label(start_day, window, alignment), values=values)


def _window_label(start_day: date, window: int, alignment: str) -> date:
    if alignment == "trailing":
        return start_day + timedelta(days=window - 1)
    if alignment == "centered":
        return start_day + timedelta(days=(window - 1) // 2)
    raise ValueError("alignment must be 'trailing' or 'centered'")


def count_daily(docs: Iterable[Document], cfg: CorpusConfig) -> DailyCounts:
    start_day, n_days = interval_days(cfg)
    counts = np.zeros(n_days, dtype=np.int64)
    for doc in docs:
        day = day_of(doc.timestamp, cfg.tz_offset_minutes)
        idx = (day - start_day).days
        if not 0 <= idx < n_days:
            raise ValueError(f"document ({doc.channel}, {doc.id}) falls outside the analysis interval")
        counts[idx] += 1
    return DailyCounts(start_day=start_day, counts=counts)


def volume_series(
    docs: Iterable[Document], cfg: CorpusConfig, window: int = 7, alignment: str = "trailing"
) -> tuple[DailyCounts, SmoothedSeries]:
    """Per-day document counts and their rolling mean."""
    daily = count_daily(docs, cfg)
    return daily, smooth_counts(daily.start_day, daily.counts, window, alignment)


def detect_crossover(smoothed: SmoothedSeries, a: int, b: int) -> CrossoverEvent | None:
    """First day where series ``b`` strictly exceeds ``a`` after not doing so.

    Returns None when no such day exists, including the pre-crossed case
    where b already exceeds a on the first day and never re-crosses.
    """
    if len(smoothed) == 0:
        raise ValueError("smoothed series is empty")
    va = smoothed.values[:, a]
    vb = smoothed.values[:, b]
    if vb[0] > va[0]:
        logger.info("series pair is pre-crossed: %s already exceeds %s on day one", EMOTIONS[b], EMOTIONS[a])
    for t in range(1, len(va)):
        if vb[t] > va[t] and vb[t - 1] <= va[t - 1]:
            return CrossoverEvent(
                emotion_a=a,
                emotion_b=b,
                day=smoothed.first_day + timedelta(days=t),
                pre_gap=float(va[t - 1] - vb[t - 1]),
                post_gap=float(va[t] - vb[t]),
            )
    return None


def is_pre_crossed(smoothed: SmoothedSeries, a: int, b: int) -> bool:
    return bool(smoothed.values[0, b] > smoothed.values[0, a])


def write_daily_csv(path: str, daily: DailySeries) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for i, day in enumerate(daily.days()):
            if daily.counts[i] > 0:
                cells = [f"{v:.6f}" for v in daily.means[i]]
            else:
                cells = [""] * N_EMOTIONS
            writer.writerow([day.isoformat(), int(daily.counts[i]), *cells])


def read_daily_csv(path: str) -> DailySeries:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != CSV_HEADER:
            raise ValueError(f"{path}: unexpected header {header!r}")
        days: list[date] = []
        counts: list[int] = []
        means: list[np.ndarray] = []
        for row in reader:
            days.append(date.fromisoformat(row[0]))
            counts.append(int(row[1]))
            if row[2] == "":
                means.append(np.full(N_EMOTIONS, np.nan))
            else:
                means.append(np.array([float(c) for c in row[2:]], dtype=float))
    if not days:
        raise ValueError(f"{path}: no data rows")
    return DailySeries(start_day=days[0], counts=np.array(counts, dtype=np.int64), means=np.vstack(means))


def write_smoothed_csv(path: str, emotions: SmoothedSeries, counts: SmoothedSeries) -> None:
    if len(emotions) != len(counts) or emotions.first_day != counts.first_day:
        raise ValueError("smoothed emotion and count series are not aligned")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for i, day in enumerate(emotions.days()):
            writer.writerow(
                [day.isoformat(), f"{counts.values[i]:.6f}", *(f"{v:.6f}" for v in emotions.values[i])]
            )


def read_smoothed_csv(path: str, window: int) -> tuple[SmoothedSeries, SmoothedSeries]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != CSV_HEADER:
            raise ValueError(f"{path}: unexpected header {header!r}")
        days: list[date] = []
        count_vals: list[float] = []
        rows: list[list[float]] = []
        for row in reader:
            days.append(date.fromisoformat(row[0]))
            count_vals.append(float(row[1]))
            rows.append([float(c) for c in row[2:]])
    if not days:
        raise ValueError(f"{path}: no data rows")
    emotions = SmoothedSeries(window=window, first_day=days[0], values=np.array(rows, dtype=float))
    counts = SmoothedSeries(window=window, first_day=days[0], values=np.array(count_vals, dtype=float))
    return emotions, counts
