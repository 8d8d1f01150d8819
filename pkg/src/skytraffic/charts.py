"""Deterministic SVG charts for sweep results.

Hand-built SVG so a chart is a pure function of its data and style: the
same CSV regenerates byte-identical output.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

PALETTE = ["#2563eb", "#16a34a", "#dc2626", "#9333ea", "#ea580c", "#0891b2"]


@dataclass
class Series:
    name: str
    x: list
    y: list
    yerr: list | None = None
    color: str | None = None


@dataclass
class Panel:
    title: str
    y_label: str
    series: list[Series] = field(default_factory=list)
    log_y: bool = False


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10.0 ** math.floor(math.log10(raw))
    for m in (1.0, 2.0, 2.5, 5.0, 10.0):
        if raw <= m * mag:
            step = m * mag
            break
    start = math.ceil(lo / step) * step
    out = []
    v = start
    while v <= hi + 1e-12 * step:
        out.append(round(v, 12))
        v += step
    return out


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def multi_panel_chart(path, panels: list[Panel], x_label: str,
                      title: str, width: int = 760, panel_height: int = 220) -> None:
    """Vertically stacked panels sharing the x axis."""
    left, right, top, bottom = 78, 24, 40, 46
    height = top + panel_height * len(panels) + bottom
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'font-family="Helvetica,Arial,sans-serif">',
        f'<rect width="{width}" height="{height}" fill="#ffffff"/>',
        f'<text x="{left}" y="24" font-size="16" fill="#111827">{title}</text>',
    ]
    xs_all = [x for p in panels for s in p.series for x in s.x]
    if not xs_all:
        parts.append("</svg>")
        _write(path, parts)
        return
    x_lo, x_hi = min(xs_all), max(xs_all)
    if x_hi == x_lo:
        x_lo, x_hi = x_lo - 0.5, x_hi + 0.5
    pw = width - left - right

    def sx(x: float) -> float:
        return left + (x - x_lo) / (x_hi - x_lo) * pw

    for pi, panel in enumerate(panels):
        py0 = top + pi * panel_height + 14
        ph = panel_height - 36
        ys = []
        for s in panel.series:
            for k, y in enumerate(s.y):
                if y is None or (isinstance(y, float) and math.isnan(y)):
                    continue
                err = s.yerr[k] if s.yerr else 0.0
                ys.extend([y - err, y + err])
        ys = [y for y in ys if not (isinstance(y, float) and math.isnan(y))]
        if panel.log_y:
            ys = [y for y in ys if y > 0.0]
        if not ys:
            continue
        y_lo, y_hi = min(ys), max(ys)
        if panel.log_y:
            y_lo, y_hi = math.log10(max(y_lo, 1e-12)), math.log10(max(y_hi, 1e-12))
            if y_hi - y_lo < 0.5:
                y_lo, y_hi = y_lo - 0.5, y_hi + 0.5
            tick_vals = list(range(math.floor(y_lo), math.ceil(y_hi) + 1))
        else:
            if y_hi == y_lo:
                y_lo, y_hi = y_lo - 0.5, y_hi + 0.5
            pad = 0.06 * (y_hi - y_lo)
            y_lo, y_hi = y_lo - pad, y_hi + pad
            tick_vals = _ticks(y_lo, y_hi)

        def sy(y: float) -> float:
            if panel.log_y:
                y = math.log10(max(y, 1e-12))
            return py0 + ph - (y - y_lo) / (y_hi - y_lo) * ph

        parts.append(f'<text x="{left}" y="{py0 - 2}" font-size="12" fill="#374151">'
                     f'{panel.title} [{panel.y_label}]</text>')
        parts.append(f'<rect x="{left}" y="{py0}" width="{pw}" height="{ph}" '
                     f'fill="none" stroke="#9ca3af"/>')
        for tv in tick_vals:
            value = 10.0 ** tv if panel.log_y else tv
            yy = sy(value)
            if yy < py0 - 1 or yy > py0 + ph + 1:
                continue
            label = f"1e{tv}" if panel.log_y else _fmt(tv)
            parts.append(f'<line x1="{left}" y1="{yy:.2f}" x2="{left + pw}" y2="{yy:.2f}" '
                         f'stroke="#f3f4f6"/>')
            parts.append(f'<text x="{left - 6}" y="{yy + 4:.2f}" text-anchor="end" '
                         f'font-size="10" fill="#6b7280">{label}</text>')
        for si, s in enumerate(panel.series):
            color = s.color or PALETTE[si % len(PALETTE)]
            pts = []
            for k, (x, y) in enumerate(zip(s.x, s.y)):
                if y is None or (isinstance(y, float) and math.isnan(y)):
                    continue
                if panel.log_y and y <= 0.0:
                    continue
                px, py = sx(x), sy(y)
                pts.append(f"{px:.2f},{py:.2f}")
                if s.yerr and s.yerr[k] > 0.0:
                    e = s.yerr[k]
                    y1 = sy(max(y - e, 1e-12) if panel.log_y else y - e)
                    y2 = sy(y + e)
                    parts.append(f'<line x1="{px:.2f}" y1="{y1:.2f}" x2="{px:.2f}" '
                                 f'y2="{y2:.2f}" stroke="{color}" stroke-width="1"/>')
                parts.append(f'<circle cx="{px:.2f}" cy="{py:.2f}" r="2.6" fill="{color}"/>')
            if len(pts) > 1:
                parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.8" '
                             f'points="{" ".join(pts)}"/>')
            lx = left + pw - 150
            ly = py0 + 14 + 14 * si
            parts.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 18}" y2="{ly}" '
                         f'stroke="{color}" stroke-width="2.5"/>')
            parts.append(f'<text x="{lx + 24}" y="{ly + 4}" font-size="11" '
                         f'fill="#374151">{s.name}</text>')

    axis_y = top + panel_height * len(panels)
    for x in _ticks(x_lo, x_hi, 6):
        if x < x_lo - 1e-9 or x > x_hi + 1e-9:
            continue
        parts.append(f'<text x="{sx(x):.2f}" y="{axis_y + 6}" text-anchor="middle" '
                     f'font-size="10" fill="#6b7280">{_fmt(x)}</text>')
    parts.append(f'<text x="{left + pw / 2:.2f}" y="{height - 12}" text-anchor="middle" '
                 f'font-size="12" fill="#374151">{x_label}</text>')
    parts.append("</svg>")
    _write(path, parts)


def _write(path, parts: list[str]) -> None:
    with open(path, "w", newline="\n") as f:
        f.write("\n".join(parts) + "\n")
