"""Deterministic SVG line plots for exported tables.

The emitter is a pure function of its inputs: no timestamps, no random ids,
fixed float formatting.  Running it twice on the same data produces
byte-identical output, which keeps plot artifacts diffable and lets runs be
compared byte-for-byte.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigError, IOError_

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd",
            "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f")

_MARGIN_LEFT = 78.0
_MARGIN_RIGHT = 18.0
_MARGIN_TOP = 34.0
_MARGIN_BOTTOM = 54.0


@dataclass(frozen=True)
class Series:
    """One named curve; x must be finite and y finite."""

    name: str
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        if x.ndim != 1 or x.shape != y.shape:
            raise ConfigError(f"series {self.name!r}: x and y must be equal-length vectors")
        if x.size == 0:
            raise ConfigError(f"series {self.name!r} is empty")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ConfigError(f"series {self.name!r} contains non-finite values")


@dataclass(frozen=True)
class PlotStyle:
    """Axis labels and scales; 'log' axes require positive data."""

    title: str = ""
    x_label: str = ""
    y_label: str = ""
    x_scale: str = "linear"
    y_scale: str = "linear"
    width: float = 720.0
    height: float = 460.0

    def __post_init__(self):
        for attr in ("x_scale", "y_scale"):
            if getattr(self, attr) not in ("linear", "log"):
                raise ConfigError(f"{attr} must be 'linear' or 'log'")
        if self.width < 200 or self.height < 150:
            raise ConfigError("plot must be at least 200 x 150")


def _fmt(v: float) -> str:
    """Coordinate formatting: fixed decimals, no negative zero."""
    out = f"{v:.3f}"
    return "0.000" if out == "-0.000" else out


def _fmt_tick(v: float) -> str:
    if v != 0 and (abs(v) >= 1e4 or abs(v) < 1e-3):
        exp = math.floor(math.log10(abs(v)))
        mant = v / 10.0 ** exp
        if abs(mant - 1.0) < 1e-9:
            return f"1e{exp}"
        return f"{mant:g}e{exp}"
    return f"{v:g}"


def _linear_ticks(lo: float, hi: float) -> list:
    """Deterministic 'nice' ticks: 1/2/5 decades covering [lo, hi]."""
    if hi <= lo:
        mid = lo
        lo, hi = mid - 0.5, mid + 0.5
    span = hi - lo
    raw = span / 5.0
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 5.0, 10.0):
        step = mult * mag
        if span / step <= 6.0:
            break
    first = math.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + 1e-9 * span:
        ticks.append(0.0 if abs(t) < 1e-12 * span else t)
        t += step
    return ticks


def _log_ticks(lo: float, hi: float) -> list:
    """One tick per decade inside [lo, hi] (inclusive of exact endpoints)."""
    k0 = math.ceil(math.log10(lo) - 1e-9)
    k1 = math.floor(math.log10(hi) + 1e-9)
    return [10.0 ** k for k in range(k0, k1 + 1)]


class _Axis:
    def __init__(self, values: np.ndarray, scale: str, lo_px: float, hi_px: float,
                 what: str):
        self.scale = scale
        self.lo_px = lo_px
        self.hi_px = hi_px
        vmin, vmax = float(values.min()), float(values.max())
        if scale == "log":
            if vmin <= 0:
                raise ConfigError(f"log {what} axis requires positive values")
            self.lo, self.hi = math.log10(vmin), math.log10(vmax)
        else:
            self.lo, self.hi = vmin, vmax
        if self.hi <= self.lo:          # single value: give it visible width
            pad = max(abs(self.lo) * 0.05, 0.5)
            self.lo -= pad
            self.hi += pad
        self.ticks = (_log_ticks(10 ** self.lo, 10 ** self.hi) if scale == "log"
                      else _linear_ticks(self.lo, self.hi))

    def to_px(self, v: float) -> float:
        t = math.log10(v) if self.scale == "log" else v
        frac = (t - self.lo) / (self.hi - self.lo)
        return self.lo_px + frac * (self.hi_px - self.lo_px)


def emit_plot(series: Sequence[Series], style: PlotStyle = PlotStyle()) -> str:
    """Render line series as standalone SVG text (one polyline per series)."""
    series = list(series)
    if not series:
        raise ConfigError("plot needs at least one series")

    all_x = np.concatenate([s.x for s in series])
    all_y = np.concatenate([s.y for s in series])
    w, h = style.width, style.height
    x_axis = _Axis(all_x, style.x_scale, _MARGIN_LEFT, w - _MARGIN_RIGHT, "x")
    y_axis = _Axis(all_y, style.y_scale, h - _MARGIN_BOTTOM, _MARGIN_TOP, "y")

    out = []
    out.append('<?xml version="1.0" encoding="UTF-8"?>')
    out.append(f'<svg xmlns="http://www.w3.org/2000/svg" width="{_fmt(w)}" '
               f'height="{_fmt(h)}" viewBox="0 0 {_fmt(w)} {_fmt(h)}">')
    out.append(f'<rect x="0" y="0" width="{_fmt(w)}" height="{_fmt(h)}" '
               'fill="#ffffff"/>')
    if style.title:
        out.append(f'<text x="{_fmt(w / 2)}" y="20" text-anchor="middle" '
                   f'font-family="sans-serif" font-size="14">{_escape(style.title)}</text>')

    # gridlines + tick labels
    for tv in x_axis.ticks:
        px = x_axis.to_px(tv)
        out.append(f'<line class="grid" x1="{_fmt(px)}" y1="{_fmt(_MARGIN_TOP)}" '
                   f'x2="{_fmt(px)}" y2="{_fmt(h - _MARGIN_BOTTOM)}" '
                   'stroke="#dddddd" stroke-width="1"/>')
        out.append(f'<text x="{_fmt(px)}" y="{_fmt(h - _MARGIN_BOTTOM + 16)}" '
                   'text-anchor="middle" font-family="sans-serif" '
                   f'font-size="11">{_fmt_tick(tv)}</text>')
    for tv in y_axis.ticks:
        py = y_axis.to_px(tv)
        out.append(f'<line class="grid" x1="{_fmt(_MARGIN_LEFT)}" y1="{_fmt(py)}" '
                   f'x2="{_fmt(w - _MARGIN_RIGHT)}" y2="{_fmt(py)}" '
                   'stroke="#dddddd" stroke-width="1"/>')
        out.append(f'<text x="{_fmt(_MARGIN_LEFT - 6)}" y="{_fmt(py + 4)}" '
                   'text-anchor="end" font-family="sans-serif" '
                   f'font-size="11">{_fmt_tick(tv)}</text>')

    # axes frame
    out.append(f'<rect x="{_fmt(_MARGIN_LEFT)}" y="{_fmt(_MARGIN_TOP)}" '
               f'width="{_fmt(w - _MARGIN_LEFT - _MARGIN_RIGHT)}" '
               f'height="{_fmt(h - _MARGIN_TOP - _MARGIN_BOTTOM)}" '
               'fill="none" stroke="#000000" stroke-width="1"/>')
    if style.x_label:
        out.append(f'<text x="{_fmt((_MARGIN_LEFT + w - _MARGIN_RIGHT) / 2)}" '
                   f'y="{_fmt(h - 14)}" text-anchor="middle" '
                   f'font-family="sans-serif" font-size="12">{_escape(style.x_label)}</text>')
    if style.y_label:
        cy = (_MARGIN_TOP + h - _MARGIN_BOTTOM) / 2
        out.append(f'<text x="16" y="{_fmt(cy)}" text-anchor="middle" '
                   f'font-family="sans-serif" font-size="12" '
                   f'transform="rotate(-90 16 {_fmt(cy)})">{_escape(style.y_label)}</text>')

    # data polylines
    for idx, s in enumerate(series):
        color = _PALETTE[idx % len(_PALETTE)]
        pts = " ".join(f"{_fmt(x_axis.to_px(xv))},{_fmt(y_axis.to_px(yv))}"
                       for xv, yv in zip(s.x, s.y))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" '
                   f'points="{pts}"/>')

    # legend
    ly = _MARGIN_TOP + 14
    for idx, s in enumerate(series):
        color = _PALETTE[idx % len(_PALETTE)]
        lx = w - _MARGIN_RIGHT - 150
        out.append(f'<line x1="{_fmt(lx)}" y1="{_fmt(ly - 4)}" x2="{_fmt(lx + 22)}" '
                   f'y2="{_fmt(ly - 4)}" stroke="{color}" stroke-width="1.5"/>')
        out.append(f'<text x="{_fmt(lx + 28)}" y="{_fmt(ly)}" '
                   f'font-family="sans-serif" font-size="11">{_escape(s.name)}</text>')
        ly += 16

    out.append("</svg>")
    return "\n".join(out) + "\n"


def _escape(text: str) -> str:
    return (str(text).replace("&", "&amp;").replace("<", "&lt;")
            .replace(">", "&gt;"))


def write_plot(path, series: Sequence[Series], style: PlotStyle) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(emit_plot(series, style))
    except OSError as exc:
        raise IOError_(f"cannot write {path}: {exc}") from None
