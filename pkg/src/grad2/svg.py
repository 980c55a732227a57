"""Standalone SVG phase portraits (velocity against position)."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

from .errors import InputError
from .integrators import Trajectory

WIDTH, HEIGHT = 800, 600
MARGIN = dict(left=70, right=170, top=40, bottom=60)
COLORS = ("#1f78b4", "#e31a1c", "#33a02c", "#ff7f00", "#6a3d9a", "#b15928", "#a6cee3", "#fb9a99")


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    span = hi - lo
    if span <= 0:
        return [lo]
    raw = span / n
    mag = 10 ** np.floor(np.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=10 * mag)
    start = np.ceil(lo / step) * step
    return [float(v) for v in np.arange(start, hi + 1e-12 * span, step)]


def render_phase_svg(
    trajectories: Sequence[tuple[str, Trajectory]],
    out_path=None,
    coords: tuple[int, int] = (0, 0),
    title: str | None = None,
) -> str:
    """Draw labelled trajectories in the (x_i, y_j) plane; ``coords`` picks (i, j).

    Returns the SVG text and writes it to ``out_path`` when given. Output is
    byte-identical for identical input.
    """
    if not trajectories:
        raise InputError("render_phase_svg needs at least one trajectory")
    ix, iy = coords
    series = []
    for label, tr in trajectories:
        if ix >= tr.dimension or iy >= tr.dimension:
            raise InputError(f"coordinate pair {coords} out of range for dimension {tr.dimension}")
        series.append((str(label), tr.xs[:, ix], tr.ys[:, iy]))
    allx = np.concatenate([s[1] for s in series])
    ally = np.concatenate([s[2] for s in series])
    x0, x1 = float(allx.min()), float(allx.max())
    y0, y1 = float(ally.min()), float(ally.max())
    if x1 - x0 == 0:
        x0, x1 = x0 - 1, x1 + 1
    if y1 - y0 == 0:
        y0, y1 = y0 - 1, y1 + 1
    px, py = 0.05 * (x1 - x0), 0.05 * (y1 - y0)
    x0, x1, y0, y1 = x0 - px, x1 + px, y0 - py, y1 + py
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def sx(v):
        return MARGIN["left"] + (v - x0) / (x1 - x0) * pw

    def sy(v):
        return MARGIN["top"] + (y1 - v) / (y1 - y0) * ph

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<rect x="{MARGIN["left"]}" y="{MARGIN["top"]}" width="{pw}" height="{ph}" '
        'fill="none" stroke="#333" stroke-width="1"/>',
    ]
    for t in _ticks(x0, x1):
        X = sx(t)
        out.append(f'<line x1="{X:.2f}" y1="{MARGIN["top"] + ph}" x2="{X:.2f}" y2="{MARGIN["top"] + ph + 5}" stroke="#333"/>')
        out.append(f'<text x="{X:.2f}" y="{MARGIN["top"] + ph + 18}" text-anchor="middle">{t:g}</text>')
    for t in _ticks(y0, y1):
        Y = sy(t)
        out.append(f'<line x1="{MARGIN["left"] - 5}" y1="{Y:.2f}" x2="{MARGIN["left"]}" y2="{Y:.2f}" stroke="#333"/>')
        out.append(f'<text x="{MARGIN["left"] - 8}" y="{Y + 4:.2f}" text-anchor="end">{t:g}</text>')
    if x0 < 0 < x1:
        out.append(f'<line x1="{sx(0):.2f}" y1="{MARGIN["top"]}" x2="{sx(0):.2f}" y2="{MARGIN["top"] + ph}" stroke="#ccc"/>')
    if y0 < 0 < y1:
        out.append(f'<line x1="{MARGIN["left"]}" y1="{sy(0):.2f}" x2="{MARGIN["left"] + pw}" y2="{sy(0):.2f}" stroke="#ccc"/>')
    out.append(f'<text x="{MARGIN["left"] + pw / 2:.1f}" y="{HEIGHT - 15}" text-anchor="middle" font-size="14">u</text>')
    out.append(f'<text x="20" y="{MARGIN["top"] + ph / 2:.1f}" text-anchor="middle" font-size="14">u&#775;</text>')
    if title:
        out.append(f'<text x="{WIDTH / 2:.1f}" y="24" text-anchor="middle" font-size="15">{escape(title)}</text>')
    for k, (label, xs, ys) in enumerate(series):
        color = COLORS[k % len(COLORS)]
        pts = " ".join(f"{sx(a):.3f},{sy(b):.3f}" for a, b in zip(xs, ys))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
    for k, (label, xs, ys) in enumerate(series):
        out.append(f'<circle cx="{sx(xs[0]):.3f}" cy="{sy(ys[0]):.3f}" r="4" fill="black"/>')
    lx = MARGIN["left"] + pw + 15
    for k, (label, _, _) in enumerate(series):
        ly = MARGIN["top"] + 10 + 20 * k
        color = COLORS[k % len(COLORS)]
        out.append(f'<g class="legend"><line x1="{lx}" y1="{ly}" x2="{lx + 20}" y2="{ly}" stroke="{color}" stroke-width="3"/>'
                   f'<text x="{lx + 26}" y="{ly + 4}">{escape(label)}</text></g>')
    out.append("</svg>")
    text = "\n".join(out) + "\n"
    if out_path is not None:
        p = Path(out_path)
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(text)
    return text
