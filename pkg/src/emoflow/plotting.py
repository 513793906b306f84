"""Deterministic static SVG charts: time-series lines and grouped TE bars.

Rendering is a pure function of (data, spec); identical inputs produce
byte-identical SVG, so golden-file comparisons are exact. Ordinates are an
affine map of the data (5% padding beyond the data range, never clipped).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from emoflow.emotions import EMOTIONS, N_EMOTIONS
from emoflow.infoflow import TEResult
from emoflow.timeseries import SmoothedSeries

_CANVAS_W = 860
_CANVAS_H = 420
_MARGIN_LEFT = 64
_MARGIN_TOP = 44
_MARGIN_BOTTOM = 56
_MARGIN_RIGHT = 170


@dataclass(frozen=True)
class PlotSpec:
    """Labels, colors, and title for one chart; labels must be unique."""

    kind: str
    title: str
    labels: tuple[str, ...]
    colors: tuple[str, ...] = field(default=())

    def validate(self) -> None:
        if self.kind not in ("timeseries_lines", "grouped_bars"):
            raise ValueError(f"unknown plot kind {self.kind!r}")
        if not self.labels:
            raise ValueError("plot needs at least one series label")
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("series labels must be unique")
        if self.colors and len(self.colors) != len(self.labels):
            raise ValueError("colors, when given, must match labels one-to-one")


_FALLBACK_COLORS = (
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
    "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
)


def _esc(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def _fmt(v: float) -> str:
    return f"{v:.3f}"


def _y_scale(lo: float, hi: float) -> tuple[float, float]:
    span = hi - lo
    pad = 0.05 * (span if span > 0.0 else max(abs(hi), 1.0))
    return lo - pad, hi + pad


def _svg_open(title: str) -> list[str]:
    return [
        '<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{_CANVAS_W}" height="{_CANVAS_H}" viewBox="0 0 {_CANVAS_W} {_CANVAS_H}">',
        f'<rect x="0" y="0" width="{_CANVAS_W}" height="{_CANVAS_H}" fill="#ffffff"/>',
        f'<text x="{_CANVAS_W // 2}" y="24" text-anchor="middle" '
        f'font-family="sans-serif" font-size="15">{_esc(title)}</text>',
    ]


def _axes(parts: list[str], x0: int, y0: int, w: int, h: int) -> None:
    parts.append(
        f'<line x1="{x0}" y1="{y0 + h}" x2="{x0 + w}" y2="{y0 + h}" stroke="#333333" stroke-width="1"/>'
    )
    parts.append(
        f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y0 + h}" stroke="#333333" stroke-width="1"/>'
    )


def _y_ticks(parts: list[str], lo: float, hi: float, x0: int, y0: int, w: int, h: int) -> None:
    for k in range(5):
        frac = k / 4
        value = lo + frac * (hi - lo)
        y = y0 + h - frac * h
        parts.append(
            f'<line x1="{x0}" y1="{_fmt(y)}" x2="{x0 + w}" y2="{_fmt(y)}" '
            'stroke="#dddddd" stroke-width="0.5"/>'
        )
        parts.append(
            f'<text x="{x0 - 6}" y="{_fmt(y + 3.5)}" text-anchor="end" '
            f'font-family="sans-serif" font-size="10">{value:.4f}</text>'
        )


def _legend(parts: list[str], labels: Sequence[str], colors: Sequence[str], x: int, y: int) -> None:
    for i, (label, color) in enumerate(zip(labels, colors)):
        row_y = y + 18 * i
        parts.append(
            f'<line x1="{x}" y1="{row_y}" x2="{x + 18}" y2="{row_y}" '
            f'stroke="{color}" stroke-width="2.5"/>'
        )
        parts.append(
            f'<text x="{x + 24}" y="{row_y + 4}" font-family="sans-serif" '
            f'font-size="11">{_esc(label)}</text>'
        )


def render_timeseries_svg(series: Sequence[SmoothedSeries], spec: PlotSpec) -> bytes:
    """Render date-indexed line series (one polyline per series).

    All series must be scalar-valued and aligned on dates (same first day,
    same length). The y-axis spans the pooled data range plus 5%.
    """
    spec.validate()
    if spec.kind != "timeseries_lines":
        raise ValueError("spec.kind must be 'timeseries_lines'")
    if not series:
        raise ValueError("no series to plot")
    if len(series) != len(spec.labels):
        raise ValueError("series count must match spec labels")
    first = series[0]
    if len(first) == 0:
        raise ValueError("series are empty")
    for s in series:
        if s.values.ndim != 1:
            raise ValueError("timeseries plot takes scalar series; split vector series first")
        if len(s) != len(first) or s.first_day != first.first_day:
            raise ValueError("series are not aligned on dates")

    colors = spec.colors or _FALLBACK_COLORS[: len(spec.labels)]
    m = len(first)
    x0, y0 = _MARGIN_LEFT, _MARGIN_TOP
    w = _CANVAS_W - _MARGIN_LEFT - _MARGIN_RIGHT
    h = _CANVAS_H - _MARGIN_TOP - _MARGIN_BOTTOM

    pooled = np.concatenate([s.values for s in series])
    lo, hi = _y_scale(float(pooled.min()), float(pooled.max()))

    def x_at(i: int) -> float:
        return x0 + (w * i / (m - 1) if m > 1 else w / 2)

    def y_at(v: float) -> float:
        return y0 + h - (v - lo) / (hi - lo) * h

    parts = _svg_open(spec.title)
    _y_ticks(parts, lo, hi, x0, y0, w, h)
    _axes(parts, x0, y0, w, h)

    days = first.days()
    n_ticks = min(6, m)
    tick_idx = sorted({round(k * (m - 1) / max(1, n_ticks - 1)) for k in range(n_ticks)})
    for i in tick_idx:
        parts.append(
            f'<text x="{_fmt(x_at(i))}" y="{y0 + h + 16}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="10">{days[i].isoformat()}</text>'
        )

    for s, color in zip(series, colors):
        points = " ".join(f"{_fmt(x_at(i))},{_fmt(y_at(float(v)))}" for i, v in enumerate(s.values))
        parts.append(
            f'<polyline points="{points}" fill="none" stroke="{color}" stroke-width="1.5"/>'
        )

    _legend(parts, spec.labels, colors, _CANVAS_W - _MARGIN_RIGHT + 16, y0 + 8)
    parts.append("</svg>")
    return ("\n".join(parts) + "\n").encode("utf-8")


def render_te_bars_svg(results: Sequence[TEResult], spec: PlotSpec) -> bytes:
    """Render per-emotion grouped bars: one x-to-y and one y-to-x bar per group.

    Expects exactly one result per canonical emotion from a single window.
    spec.labels names the two directions in (x_to_y, y_to_x) order.
    """
    spec.validate()
    if spec.kind != "grouped_bars":
        raise ValueError("spec.kind must be 'grouped_bars'")
    if len(spec.labels) != 2:
        raise ValueError("grouped_bars takes exactly two direction labels")

    by_emotion: dict[int, TEResult] = {}
    windows = set()
    for r in results:
        if r.emotion is None:
            raise ValueError("every TE result needs an emotion index")
        if r.emotion in by_emotion:
            raise ValueError(f"duplicate emotion {EMOTIONS[r.emotion]!r}")
        by_emotion[r.emotion] = r
        windows.add(r.window)
    for i, name in enumerate(EMOTIONS):
        if i not in by_emotion:
            raise ValueError(f"missing emotion {name!r}")
    if len(windows) > 1:
        raise ValueError("grouped bars take results from a single window")

    colors = spec.colors or ("#ff7f0e", "#1f77b4")
    x0, y0 = _MARGIN_LEFT, _MARGIN_TOP
    w = _CANVAS_W - _MARGIN_LEFT - _MARGIN_RIGHT
    h = _CANVAS_H - _MARGIN_TOP - _MARGIN_BOTTOM

    peak = max(max(r.te_x_to_y, r.te_y_to_x) for r in by_emotion.values())
    hi = peak * 1.05 if peak > 0.0 else 1.0

    def bar_height(v: float) -> float:
        return v / hi * h

    parts = _svg_open(spec.title)
    _y_ticks(parts, 0.0, hi, x0, y0, w, h)
    _axes(parts, x0, y0, w, h)

    group_w = w / N_EMOTIONS
    bar_w = group_w * 0.3
    for i, name in enumerate(EMOTIONS):
        r = by_emotion[i]
        gx = x0 + i * group_w
        for k, value in enumerate((r.te_x_to_y, r.te_y_to_x)):
            bx = gx + group_w * 0.15 + k * bar_w
            bh = bar_height(value)
            parts.append(
                f'<rect x="{_fmt(bx)}" y="{_fmt(y0 + h - bh)}" width="{_fmt(bar_w)}" '
                f'height="{_fmt(bh)}" fill="{colors[k]}"/>'
            )
        parts.append(
            f'<text x="{_fmt(gx + group_w / 2)}" y="{y0 + h + 16}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="10">{name}</text>'
        )

    _legend(parts, spec.labels, colors, _CANVAS_W - _MARGIN_RIGHT + 16, y0 + 8)
    parts.append("</svg>")
    return ("\n".join(parts) + "\n").encode("utf-8")
