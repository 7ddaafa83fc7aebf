"""Small deterministic SVG renderer for densities, histograms and interval plots."""
from __future__ import annotations

from html import escape
from typing import Mapping, Sequence

import numpy as np

WIDTH, HEIGHT = 640, 400
MARGIN = dict(left=70, right=20, top=40, bottom=50)
PALETTE = ["#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d", "#666666"]


def _f(x: float) -> str:
    return f"{x:.2f}"


class _Canvas:
    def __init__(self, xlim, ylim, title: str, width=WIDTH, height=HEIGHT, left=MARGIN["left"]):
        self.left = left
        self.x0, self.x1 = xlim
        self.y0, self.y1 = ylim
        if self.x1 == self.x0:
            self.x0, self.x1 = self.x0 - 0.5, self.x1 + 0.5
        if self.y1 == self.y0:
            self.y0, self.y1 = self.y0 - 0.5, self.y1 + 0.5
        self.w, self.h = width, height
        self.parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
            f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
            f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
            f'<text x="{width / 2:.0f}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>',
        ]

    def px(self, x):
        span = self.w - self.left - MARGIN["right"]
        return self.left + (x - self.x0) / (self.x1 - self.x0) * span

    def py(self, y):
        span = self.h - MARGIN["top"] - MARGIN["bottom"]
        return self.h - MARGIN["bottom"] - (y - self.y0) / (self.y1 - self.y0) * span

    def axes(self, xlabel="", ylabel="", yticks=True):
        l, b = self.left, self.h - MARGIN["bottom"]
        r, t = self.w - MARGIN["right"], MARGIN["top"]
        self.parts.append(f'<path d="M{l},{t} L{l},{b} L{r},{b}" fill="none" stroke="black"/>')
        for v in np.linspace(self.x0, self.x1, 6):
            x = self.px(v)
            self.parts.append(f'<line x1="{_f(x)}" y1="{b}" x2="{_f(x)}" y2="{b + 4}" stroke="black"/>')
            self.parts.append(f'<text x="{_f(x)}" y="{b + 16}" text-anchor="middle">{v:.3g}</text>')
        if yticks:
            for v in np.linspace(self.y0, self.y1, 5):
                y = self.py(v)
                self.parts.append(f'<line x1="{l - 4}" y1="{_f(y)}" x2="{l}" y2="{_f(y)}" stroke="black"/>')
                self.parts.append(f'<text x="{l - 6}" y="{_f(y + 4)}" text-anchor="end">{v:.3g}</text>')
        if xlabel:
            self.parts.append(f'<text x="{(l + r) / 2:.0f}" y="{self.h - 12}" text-anchor="middle">'
                              f'{escape(xlabel)}</text>')
        if ylabel:
            self.parts.append(f'<text x="14" y="{(t + b) / 2:.0f}" text-anchor="middle" '
                              f'transform="rotate(-90 14 {(t + b) / 2:.0f})">{escape(ylabel)}</text>')

    def polyline(self, xs, ys, color, width=1.5, dash=None):
        pts = " ".join(f"{_f(self.px(x))},{_f(self.py(y))}" for x, y in zip(xs, ys))
        extra = f' stroke-dasharray="{dash}"' if dash else ""
        self.parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                          f'stroke-width="{width}"{extra}/>')

    def vline(self, x, color="black", dash="4,3", label=None):
        self.polyline([x, x], [self.y0, self.y1], color, 1.0, dash)
        if label:
            self.parts.append(f'<text x="{_f(self.px(x) + 3)}" y="{MARGIN["top"] + 10}" '
                              f'fill="{color}">{escape(label)}</text>')

    def rect(self, x0, y0, x1, y1, color, opacity=0.6):
        X0, X1 = sorted((self.px(x0), self.px(x1)))
        Y0, Y1 = sorted((self.py(y0), self.py(y1)))
        self.parts.append(f'<rect x="{_f(X0)}" y="{_f(Y0)}" width="{_f(X1 - X0)}" '
                          f'height="{_f(Y1 - Y0)}" fill="{color}" fill-opacity="{opacity}"/>')

    def text(self, x, y, s, anchor="start", color="black"):
        self.parts.append(f'<text x="{_f(x)}" y="{_f(y)}" text-anchor="{anchor}" '
                          f'fill="{color}">{escape(s)}</text>')

    def legend(self, labels):
        for k, lab in enumerate(labels):
            y = MARGIN["top"] + 14 * k + 4
            x = self.w - MARGIN["right"] - 130
            self.parts.append(f'<rect x="{x}" y="{y}" width="10" height="10" fill="{PALETTE[k % 8]}"/>')
            self.text(x + 14, y + 9, lab)

    def render(self) -> str:
        return "\n".join(self.parts + ["</svg>"]) + "\n"


def gaussian_kde(values, grid) -> np.ndarray:
    """Gaussian kernel density with Silverman's bandwidth."""
    v = np.asarray(values, dtype=np.float64)
    sd = v.std(ddof=1) if v.size > 1 else 0.0
    iqr = np.subtract(*np.percentile(v, [75, 25])) if v.size > 1 else 0.0
    scale = min(sd, iqr / 1.34) if iqr > 0 else sd
    bw = 0.9 * scale * v.size ** -0.2 if scale > 0 else 1e-3
    z = (grid[:, None] - v[None, :]) / bw
    return np.exp(-0.5 * z * z).sum(axis=1) / (v.size * bw * np.sqrt(2 * np.pi))


def density_plot(series: Mapping[str, Sequence[float]], title: str, xlabel: str = "",
                 vlines: Sequence[tuple[float, str]] = (), n_grid: int = 200) -> str:
    series = {k: np.asarray(v, float) for k, v in series.items() if len(v)}
    allv = np.concatenate(list(series.values())) if series else np.zeros(1)
    lo, hi = float(allv.min()), float(allv.max())
    pad = 0.1 * (hi - lo or 1.0)
    grid = np.linspace(lo - pad, hi + pad, n_grid)
    dens = {k: gaussian_kde(v, grid) for k, v in series.items()}
    ymax = max([d.max() for d in dens.values()] + [1e-12]) * 1.05
    c = _Canvas((grid[0], grid[-1]), (0.0, ymax), title)
    c.axes(xlabel, "density")
    for k, (name, d) in enumerate(dens.items()):
        c.polyline(grid, d, PALETTE[k % 8])
    for x, lab in vlines:
        c.vline(x, label=lab)
    c.legend(list(dens))
    return c.render()


def histogram(values, title: str, xlabel: str = "", bins: int = 50,
              marks: Sequence[tuple[float, str]] = ()) -> str:
    v = np.asarray(values, dtype=np.float64)
    v = v[np.isfinite(v)]
    counts, edges = np.histogram(v, bins=bins)
    c = _Canvas((float(edges[0]), float(edges[-1])), (0.0, float(counts.max() or 1) * 1.05), title)
    c.axes(xlabel, "count")
    for k in range(len(counts)):
        if counts[k]:
            c.rect(edges[k], 0.0, edges[k + 1], counts[k], PALETTE[0])
    for x, lab in marks:
        c.vline(x, color="#d95f02", label=lab)
    return c.render()


def interval_plot(rows: Sequence[tuple[str, float, float, float]], title: str,
                  xlabel: str = "", groups: Sequence[int] | None = None,
                  group_labels: Sequence[str] | None = None) -> str:
    """One horizontal interval per row: (label, point, lower, upper)."""
    n = len(rows)
    height = max(HEIGHT, MARGIN["top"] + MARGIN["bottom"] + 14 * n)
    lo = min((r[2] for r in rows), default=0.0)
    hi = max((r[3] for r in rows), default=1.0)
    pad = 0.05 * (hi - lo or 1.0)
    c = _Canvas((lo - pad, hi + pad), (-0.5, n - 0.5), title, WIDTH + 80, height, left=150)
    c.axes(xlabel, yticks=False)
    for i, (label, point, a, b) in enumerate(rows):
        y = n - 1 - i
        color = PALETTE[(groups[i] if groups else 0) % 8]
        c.polyline([a, b], [y, y], color, 2.0)
        c.parts.append(f'<circle cx="{_f(c.px(point))}" cy="{_f(c.py(y))}" r="3" fill="{color}"/>')
        c.text(c.left - 6, c.py(y) + 4, label, anchor="end")
    if group_labels:
        c.legend(list(group_labels))
    return c.render()
