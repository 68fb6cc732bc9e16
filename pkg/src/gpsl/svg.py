"""Tiny static SVG line-plot writer (axes, ticks, optional log scales, legend).

No scripts and no external resources, so output is byte-stable.
"""

import math
from xml.sax.saxutils import escape

import numpy as np

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")
W, H = 640, 440
ML, MR, MT, MB = 70, 20, 30, 55


def _fmt(v):
    if v == 0:
        return "0"
    a = abs(v)
    if 1e-3 <= a < 1e4:
        return f"{v:.4g}"
    return f"{v:.1e}"


def _ticks(lo, hi, log):
    if log:
        a, b = math.floor(lo), math.ceil(hi)
        step = max(1, (b - a) // 6)
        return [float(e) for e in range(a, b + 1, step) if lo - 1e-9 <= e <= hi + 1e-9]
    span = hi - lo
    raw = span / 6 if span > 0 else 1.0
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=10 * mag)
    start = math.ceil(lo / step) * step
    n = int(math.floor((hi - start) / step + 1e-9)) + 1
    return [start + i * step for i in range(max(n, 0))]


class LinePlot:
    def __init__(self, title="", xlabel="", ylabel="", logx=False, logy=False):
        self.title, self.xlabel, self.ylabel = title, xlabel, ylabel
        self.logx, self.logy = logx, logy
        self.series = []

    def add(self, x, y, label, dashed=False):
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        ok = np.isfinite(x) & np.isfinite(y)
        if self.logx:
            ok &= x > 0
        if self.logy:
            ok &= y > 0
        self.series.append((x[ok], y[ok], label, dashed))
        return self

    def _tx(self, v):
        return np.log10(v) if self.logx else v

    def _ty(self, v):
        return np.log10(v) if self.logy else v

    def render(self):
        xs = [self._tx(s[0]) for s in self.series if s[0].size]
        ys = [self._ty(s[1]) for s in self.series if s[1].size]
        x0, x1 = (min(a.min() for a in xs), max(a.max() for a in xs)) if xs else (0.0, 1.0)
        y0, y1 = (min(a.min() for a in ys), max(a.max() for a in ys)) if ys else (0.0, 1.0)
        if x1 == x0:
            x1 = x0 + 1.0
        if y1 == y0:
            y1 = y0 + 1.0
        pad = 0.04 * (y1 - y0)
        y0, y1 = y0 - pad, y1 + pad
        pw, ph = W - ML - MR, H - MT - MB

        def px(v):
            return ML + (v - x0) / (x1 - x0) * pw

        def py(v):
            return MT + (1 - (v - y0) / (y1 - y0)) * ph

        out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
               f'viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">',
               f'<rect width="{W}" height="{H}" fill="white"/>',
               f'<rect x="{ML}" y="{MT}" width="{pw}" height="{ph}" fill="none" stroke="black"/>']
        for t in _ticks(x0, x1, self.logx):
            X = px(t)
            lab = _fmt(10 ** t) if self.logx else _fmt(t)
            out.append(f'<line x1="{X:.2f}" y1="{MT + ph}" x2="{X:.2f}" y2="{MT + ph + 5}" stroke="black"/>')
            out.append(f'<text x="{X:.2f}" y="{MT + ph + 18}" text-anchor="middle">{lab}</text>')
        for t in _ticks(y0, y1, self.logy):
            Y = py(t)
            lab = _fmt(10 ** t) if self.logy else _fmt(t)
            out.append(f'<line x1="{ML - 5}" y1="{Y:.2f}" x2="{ML}" y2="{Y:.2f}" stroke="black"/>')
            out.append(f'<text x="{ML - 8}" y="{Y + 4:.2f}" text-anchor="end">{lab}</text>')
        out.append(f'<text x="{ML + pw / 2}" y="{H - 12}" text-anchor="middle">{escape(self.xlabel)}</text>')
        out.append(f'<text x="16" y="{MT + ph / 2}" text-anchor="middle" '
                   f'transform="rotate(-90 16 {MT + ph / 2})">{escape(self.ylabel)}</text>')
        if self.title:
            out.append(f'<text x="{ML + pw / 2}" y="18" text-anchor="middle">{escape(self.title)}</text>')
        out.append(f'<clipPath id="plot"><rect x="{ML}" y="{MT}" width="{pw}" height="{ph}"/></clipPath>')
        for i, (x, y, label, dashed) in enumerate(self.series):
            if x.size == 0:
                continue
            col = PALETTE[i % len(PALETTE)]
            pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(self._tx(x), self._ty(y)))
            dash = ' stroke-dasharray="6,4"' if dashed else ""
            out.append(f'<polyline clip-path="url(#plot)" fill="none" stroke="{col}" '
                       f'stroke-width="1.6"{dash} points="{pts}"/>')
            ly = MT + 16 + 16 * i
            out.append(f'<line x1="{ML + pw - 150}" y1="{ly - 4}" x2="{ML + pw - 126}" y2="{ly - 4}" '
                       f'stroke="{col}" stroke-width="2"{dash}/>')
            out.append(f'<text x="{ML + pw - 120}" y="{ly}">{escape(label)}</text>')
        out.append("</svg>")
        return "\n".join(out) + "\n"

    def save(self, path):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.render())
