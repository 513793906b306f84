"""Directional influence between two aligned series via transfer entropy.

Real-valued series are discretized by equal-width binning; the influence of
x on y is the plug-in estimate (in bits) of

    sum over (y_t, y_prev, x_prev) of
        P(y_t, y_prev, x_prev) * log2[ P(y_t | y_prev, x_prev) / P(y_t | y_prev) ]

where "prev" is ``lag`` steps back and all probabilities are empirical
frequencies of the discretized labels. Unobserved triples contribute 0, and
history length is fixed to one sample on both sides.

Significance comes from cyclic-shift surrogates of the source series: a
random nonzero rotation preserves the source's marginal autocorrelation
while destroying any cross-series coupling.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from emoflow.emotions import EMOTIONS

logger = logging.getLogger(__name__)

_NEG_SLACK = 1e-12


@dataclass(frozen=True)
class BinningSpec:
    """Equal-width binning parameters.

    ``fixed_range`` of None means the bin edges span each series' own
    min/max; otherwise every value must fall inside the given (lo, hi).
    """

    n_bins: int = 3
    fixed_range: tuple[float, float] | None = None

    def validate(self) -> None:
        if self.n_bins < 2:
            raise ValueError("n_bins must be >= 2")
        if self.fixed_range is not None:
            lo, hi = self.fixed_range
            if not lo < hi:
                raise ValueError("fixed range must satisfy lo < hi")


@dataclass(frozen=True)
class SymbolSeries:
    """Discretized series; symbols are ints in [0, n_bins), day-aligned with the source."""

    symbols: np.ndarray
    n_bins: int

    def __len__(self) -> int:
        return len(self.symbols)


@dataclass(frozen=True)
class JointDistribution:
    """Counts over (y_t, y_prev, x_prev) triples; total = aligned length - lag."""

    counts: np.ndarray
    total: int


@dataclass(frozen=True)
class TEResult:
    """Bidirectional transfer entropy for one series pair.

    ``emotion`` is a canonical emotion index, or None for non-emotion
    series. ``window`` carries (start, end) labels for reporting.
    """

    te_x_to_y: float
    te_y_to_x: float
    n_samples: int
    n_bins: int
    lag: int
    emotion: int | None = None
    window: tuple[str, str] | None = None
    p_x_to_y: float | None = None
    p_y_to_x: float | None = None


def discretize(values: Sequence[float] | np.ndarray, spec: BinningSpec) -> SymbolSeries:
    """Equal-width binning: symbol = floor((v - lo) / width), hi mapped to the top bin.

    A constant series under per-series range degenerates to all zeros.
    Under a fixed range, any value outside [lo, hi] is an error naming the
    offending index.
    """
    spec.validate()
    values = np.asarray(values, dtype=float)
    if values.ndim != 1 or values.size == 0:
        raise ValueError("values must be a non-empty 1-D sequence")
    if not np.all(np.isfinite(values)):
        raise ValueError("values must be finite")

    if spec.fixed_range is not None:
        lo, hi = spec.fixed_range
        bad = np.nonzero((values < lo) | (values > hi))[0]
        if bad.size:
            raise ValueError(
                f"value {values[bad[0]]!r} at index {int(bad[0])} outside fixed range [{lo}, {hi}]"
            )
    else:
        lo, hi = float(values.min()), float(values.max())

    if hi == lo:
        symbols = np.zeros(values.size, dtype=np.int64)
    else:
        width = (hi - lo) / spec.n_bins
        symbols = np.floor((values - lo) / width).astype(np.int64)
        # v == hi lands in bin n_bins; clamp it (and float-rounding spill) into the top bin.
        np.clip(symbols, 0, spec.n_bins - 1, out=symbols)
    return SymbolSeries(symbols=symbols, n_bins=spec.n_bins)


def joint_counts(x: SymbolSeries, y: SymbolSeries, lag: int = 1) -> JointDistribution:
    """Count (y_t, y_prev, x_prev) triples over all t >= lag."""
    if lag < 1:
        raise ValueError("lag must be >= 1")
    n = len(y)
    if len(x) != n:
        raise ValueError(f"series lengths differ: {len(x)} vs {n}")
    if n < lag + 1:
        raise ValueError(f"series of length {n} too short for lag {lag}")
    y_t = y.symbols[lag:]
    y_prev = y.symbols[:-lag]
    x_prev = x.symbols[:-lag]
    by, bx = y.n_bins, x.n_bins
    flat = (y_t * by + y_prev) * bx + x_prev
    counts = np.bincount(flat, minlength=by * by * bx).reshape(by, by, bx)
    return JointDistribution(counts=counts, total=n - lag)


def transfer_entropy(j: JointDistribution) -> float:
    """Plug-in transfer entropy in bits from a triple-count table.

    Conditionals are formed from marginalized counts; cells with zero joint
    count contribute nothing. The mathematically non-negative result is
    clamped to 0 when float error leaves it within 1e-12 below.
    """
    counts = j.counts.astype(float)
    total = counts.sum()
    if total <= 0:
        raise ValueError("empty joint distribution")
    c_yp_xp = counts.sum(axis=0, keepdims=True)  # (1, by, bx)
    c_yt_yp = counts.sum(axis=2, keepdims=True)  # (by, by, 1)
    c_yp = counts.sum(axis=(0, 2), keepdims=True)  # (1, by, 1)

    mask = counts > 0
    p = counts[mask] / total
    num = counts[mask] * np.broadcast_to(c_yp, counts.shape)[mask]
    den = (
        np.broadcast_to(c_yp_xp, counts.shape)[mask]
        * np.broadcast_to(c_yt_yp, counts.shape)[mask]
    )
    te = float(np.sum(p * np.log2(num / den)))
    if -_NEG_SLACK <= te < 0.0:
        te = 0.0
    return te


def _te_from_symbols(x: SymbolSeries, y: SymbolSeries, lag: int) -> float:
    return transfer_entropy(joint_counts(x, y, lag))


def bidirectional_te(
    x_series: Sequence[float] | np.ndarray,
    y_series: Sequence[float] | np.ndarray,
    spec: BinningSpec,
    lag: int = 1,
) -> TEResult:
    """Discretize each series independently and measure influence both ways."""
    x_sym = discretize(x_series, spec)
    y_sym = discretize(y_series, spec)
    return TEResult(
        te_x_to_y=_te_from_symbols(x_sym, y_sym, lag),
        te_y_to_x=_te_from_symbols(y_sym, x_sym, lag),
        n_samples=len(x_sym) - lag,
        n_bins=spec.n_bins,
        lag=lag,
    )


def windowed_te(
    x_series: Sequence[float] | np.ndarray,
    y_series: Sequence[float] | np.ndarray,
    windows: Sequence[tuple[int, int]],
    spec: BinningSpec,
    lag: int = 1,
    rebin_per_window: bool = True,
) -> tuple[list[TEResult], list[str]]:
    """Bidirectional TE per index window (inclusive bounds).

    Windows must be non-overlapping and inside the series span. Each window
    is re-binned on its own slice by default; ``rebin_per_window=False``
    bins the full series once and slices the symbols instead. Windows too
    short for the lag produce a diagnostic and no result.
    """
    x = np.asarray(x_series, dtype=float)
    y = np.asarray(y_series, dtype=float)
    if x.shape != y.shape:
        raise ValueError("x and y series must be aligned")
    n = x.shape[0]

    previous_end = -1
    for start, end in windows:
        if start > end or start < 0 or end >= n:
            raise ValueError(f"window ({start}, {end}) outside series span [0, {n - 1}]")
        if start <= previous_end:
            raise ValueError("windows must be non-overlapping and ordered")
        previous_end = end

    global_x = discretize(x, spec) if not rebin_per_window else None
    global_y = discretize(y, spec) if not rebin_per_window else None

    results: list[TEResult] = []
    diagnostics: list[str] = []
    for start, end in windows:
        length = end - start + 1
        if length < lag + 2:
            diagnostics.append(
                f"window ({start}, {end}) has {length} points; needs at least {lag + 2} for lag {lag}"
            )
            continue
        if rebin_per_window:
            x_sym = discretize(x[start : end + 1], spec)
            y_sym = discretize(y[start : end + 1], spec)
        else:
            x_sym = SymbolSeries(global_x.symbols[start : end + 1], spec.n_bins)
            y_sym = SymbolSeries(global_y.symbols[start : end + 1], spec.n_bins)
        results.append(
            TEResult(
                te_x_to_y=_te_from_symbols(x_sym, y_sym, lag),
                te_y_to_x=_te_from_symbols(y_sym, x_sym, lag),
                n_samples=length - lag,
                n_bins=spec.n_bins,
                lag=lag,
                window=(str(start), str(end)),
            )
        )
    for message in diagnostics:
        logger.warning("%s", message)
    return results, diagnostics


@dataclass(frozen=True)
class SignificanceResult:
    p_x_to_y: float
    p_y_to_x: float
    n_surrogates: int


def permutation_significance(
    x_series: Sequence[float] | np.ndarray,
    y_series: Sequence[float] | np.ndarray,
    spec: BinningSpec,
    lag: int,
    n_surrogates: int,
    seed: int,
) -> SignificanceResult:
    """One-sided surrogate p-values for both TE directions.

    Surrogates cyclically shift the source series by a uniform random
    nonzero offset; a rotation permutes the multiset of values, so per-series
    binning commutes with it and symbols can be rotated directly.
    p = (1 + #{surrogate TE >= observed}) / (1 + n_surrogates), deterministic
    for a given seed (x-to-y offsets are drawn first, then y-to-x).
    """
    if n_surrogates < 19:
        raise ValueError("n_surrogates must be >= 19")
    x_sym = discretize(x_series, spec)
    y_sym = discretize(y_series, spec)
    n = len(x_sym)
    if n < lag + 2:
        raise ValueError("series too short for surrogate testing")

    rng = np.random.default_rng(seed)
    p_values: list[float] = []
    for source, target in ((x_sym, y_sym), (y_sym, x_sym)):
        observed = _te_from_symbols(source, target, lag)
        offsets = 1 + rng.integers(0, n - 1, size=n_surrogates)
        exceed = 0
        for offset in offsets:
            rotated = SymbolSeries(np.roll(source.symbols, int(offset)), source.n_bins)
            if _te_from_symbols(rotated, target, lag) >= observed:
                exceed += 1
        p_values.append((1 + exceed) / (1 + n_surrogates))
    return SignificanceResult(p_x_to_y=p_values[0], p_y_to_x=p_values[1], n_surrogates=n_surrogates)


def attach_significance(result: TEResult, sig: SignificanceResult) -> TEResult:
    return replace(result, p_x_to_y=sig.p_x_to_y, p_y_to_x=sig.p_y_to_x)


def te_report_json(results: Sequence[TEResult]) -> str:
    """Serialize results as a JSON array with explicit per-field units."""
    rows = []
    for r in results:
        row: dict[str, object] = {
            "emotion": EMOTIONS[r.emotion] if r.emotion is not None else None,
            "window_start": r.window[0] if r.window else None,
            "window_end": r.window[1] if r.window else None,
            "te_x_to_y_bits": r.te_x_to_y,
            "te_y_to_x_bits": r.te_y_to_x,
            "n_samples": r.n_samples,
            "n_bins": r.n_bins,
            "lag": r.lag,
        }
        if r.p_x_to_y is not None:
            row["p_x_to_y"] = r.p_x_to_y
        if r.p_y_to_x is not None:
            row["p_y_to_x"] = r.p_y_to_x
        rows.append(row)
    return json.dumps(rows, indent=2, ensure_ascii=False) + "\n"


def te_report_from_json(text: str) -> list[TEResult]:
    rows = json.loads(text)
    results = []
    for row in rows:
        emotion = row.get("emotion")
        results.append(
            TEResult(
                te_x_to_y=float(row["te_x_to_y_bits"]),
                te_y_to_x=float(row["te_y_to_x_bits"]),
                n_samples=int(row["n_samples"]),
                n_bins=int(row["n_bins"]),
                lag=int(row["lag"]),
                emotion=EMOTIONS.index(emotion) if emotion is not None else None,
                window=(row["window_start"], row["window_end"])
                if row.get("window_start") is not None
                else None,
                p_x_to_y=row.get("p_x_to_y"),
                p_y_to_x=row.get("p_y_to_x"),
            )
        )
    return results
