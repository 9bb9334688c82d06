"""Minimal deterministic SVG line plots (no external renderer)."""

from __future__ import annotations

import math

import numpy as np

_W, _H = 640, 420
_ML, _MR, _MT, _MB = 70, 20, 40, 50
_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]


def _ticks(lo, hi, n=6):
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 5.0, 10.0):
        if raw <= mult * mag:
            step = mult * mag
            break
    start = math.ceil(lo / step) * step
    out = []
    t = start
    while t <= hi + 1e-12 * step:
        out.append(0.0 if abs(t) < 1e-12 * step else t)
        t += step
    return out


def _fmt(v):
    if v == 0:
        return "0"
    if abs(v) >= 1e4 or abs(v) < 1e-3:
        return f"{v:.1e}"
    return f"{v:g}"


def line_plot(path, series, title="", xlabel="", ylabel="", logx=False, logy=False):
    """Write a line plot to an SVG file.

    ``series`` maps a label to an (x, y) pair of sequences.  Log axes
    drop nonpositive values.  Output bytes depend only on the inputs.
    """
    prepared = []
    for label, (xs, ys) in series.items():
        x = np.asarray(xs, dtype=float)
        y = np.asarray(ys, dtype=float)
        keep = np.isfinite(x) & np.isfinite(y)
        if logx:
            keep &= x > 0
        if logy:
            keep &= y > 0
        x, y = x[keep], y[keep]
        if logx:
            x = np.log10(x)
        if logy:
            y = np.log10(y)
        if x.size:
            prepared.append((label, x, y))
    if not prepared:
        prepared = [("empty", np.array([0.0]), np.array([0.0]))]
    xlo = min(float(np.min(x)) for _, x, _ in prepared)
    xhi = max(float(np.max(x)) for _, x, _ in prepared)
    ylo = min(float(np.min(y)) for _, _, y in prepared)
    yhi = max(float(np.max(y)) for _, _, y in prepared)
    if xhi == xlo:
        xhi += 1.0
    if yhi == ylo:
        yhi += 1.0
    padx = 0.03 * (xhi - xlo)
    pady = 0.05 * (yhi - ylo)
    xlo, xhi = xlo - padx, xhi + padx
    ylo, yhi = ylo - pady, yhi + pady

    def sx(v):
        return _ML + (v - xlo) / (xhi - xlo) * (_W - _ML - _MR)

    def sy(v):
        return _H - _MB - (v - ylo) / (yhi - ylo) * (_H - _MT - _MB)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}" font-family="monospace" font-size="12">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W / 2:.1f}" y="22" text-anchor="middle" font-size="14">{title}</text>',
    ]
    for t in _ticks(xlo, xhi):
        px = sx(t)
        out.append(f'<line x1="{px:.2f}" y1="{_MT}" x2="{px:.2f}" y2="{_H - _MB}" stroke="#dddddd"/>')
        lbl = _fmt(10 ** t) if logx else _fmt(t)
        out.append(f'<text x="{px:.2f}" y="{_H - _MB + 18}" text-anchor="middle">{lbl}</text>')
    for t in _ticks(ylo, yhi):
        py = sy(t)
        out.append(f'<line x1="{_ML}" y1="{py:.2f}" x2="{_W - _MR}" y2="{py:.2f}" stroke="#dddddd"/>')
        lbl = _fmt(10 ** t) if logy else _fmt(t)
        out.append(f'<text x="{_ML - 6}" y="{py + 4:.2f}" text-anchor="end">{lbl}</text>')
    out.append(f'<rect x="{_ML}" y="{_MT}" width="{_W - _ML - _MR}" height="{_H - _MT - _MB}" '
               'fill="none" stroke="black"/>')
    out.append(f'<text x="{_W / 2:.1f}" y="{_H - 12}" text-anchor="middle">{xlabel}</text>')
    out.append(f'<text x="16" y="{_H / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 16 {_H / 2:.1f})">{ylabel}</text>')
    for i, (label, x, y) in enumerate(prepared):
        color = _COLORS[i % len(_COLORS)]
        pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(x, y))
        out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        out.append(f'<text x="{_W - _MR - 6}" y="{_MT + 16 + 16 * i}" text-anchor="end" '
                   f'fill="{color}">{label}</text>')
    out.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(out) + "\n")
