"""Dependency-free SVG figures for effects, attributions and pruning paths.

Every function returns the SVG document as a string. Output depends only on
the inputs (numbers are printed with fixed precision, nothing time-based is
embedded), so figures can be diffed across runs.
"""

from __future__ import annotations

import itertools
import json
import math
from xml.sax.saxutils import escape

import numpy as np

from .fanova import FanovaModel

WIDTH, HEIGHT = 480, 320
MARGIN = dict(left=64, right=24, top=40, bottom=48)
PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"]


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _tick(v: float) -> str:
    return f"{v:.3g}"


class _Canvas:
    def __init__(self, title: str, width=WIDTH, height=HEIGHT, metadata=None):
        self.width, self.height = width, height
        self.parts = []
        self.metadata = metadata
        self.title = title

    @property
    def plot_box(self):
        return (
            MARGIN["left"],
            MARGIN["top"],
            self.width - MARGIN["right"],
            self.height - MARGIN["bottom"],
        )

    def add(self, element: str) -> None:
        self.parts.append(element)

    def text(self, x, y, s, anchor="middle", size=11, rotate=None, weight="normal"):
        transform = f' transform="rotate({rotate} {_fmt(x)} {_fmt(y)})"' if rotate is not None else ""
        self.add(
            f'<text x="{_fmt(x)}" y="{_fmt(y)}" font-size="{size}" text-anchor="{anchor}" '
            f'font-weight="{weight}"{transform}>{escape(str(s))}</text>'
        )

    def line(self, x1, y1, x2, y2, stroke="#000", width=1.0, dash=None):
        extra = f' stroke-dasharray="{dash}"' if dash else ""
        self.add(
            f'<line x1="{_fmt(x1)}" y1="{_fmt(y1)}" x2="{_fmt(x2)}" y2="{_fmt(y2)}" '
            f'stroke="{stroke}" stroke-width="{width}"{extra}/>'
        )

    def rect(self, x, y, w, h, fill, stroke="none", title=None):
        tip = f"<title>{escape(title)}</title>" if title else ""
        self.add(
            f'<rect x="{_fmt(x)}" y="{_fmt(y)}" width="{_fmt(max(w, 0))}" height="{_fmt(max(h, 0))}" '
            f'fill="{fill}" stroke="{stroke}">{tip}</rect>'
        )

    def polyline(self, points, stroke, width=1.5):
        coords = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in points)
        self.add(f'<polyline points="{coords}" fill="none" stroke="{stroke}" stroke-width="{width}"/>')

    def render(self) -> str:
        head = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}" height="{self.height}" '
            f'viewBox="0 0 {self.width} {self.height}" font-family="sans-serif">'
        ]
        if self.metadata is not None:
            head.append(f"<metadata>{escape(json.dumps(self.metadata, sort_keys=True))}</metadata>")
        head.append(f'<rect width="{self.width}" height="{self.height}" fill="#fff"/>')
        self.text(self.width / 2, 22, self.title, size=13, weight="bold")
        return "\n".join(head + self.parts + ["</svg>"]) + "\n"


class _Scale:
    def __init__(self, lo, hi, out_lo, out_hi):
        if not hi > lo:
            pad = max(abs(lo), 1.0) * 0.5
            lo, hi = lo - pad, hi + pad
        self.lo, self.hi, self.out_lo, self.out_hi = lo, hi, out_lo, out_hi

    def __call__(self, v):
        return self.out_lo + (v - self.lo) / (self.hi - self.lo) * (self.out_hi - self.out_lo)

    def ticks(self, n=5):
        return np.linspace(self.lo, self.hi, n)


def _axes(canvas: _Canvas, xs: _Scale, ys: _Scale, xlabel: str, ylabel: str, xticks=True):
    x0, y0, x1, y1 = canvas.plot_box
    canvas.line(x0, y1, x1, y1)
    canvas.line(x0, y0, x0, y1)
    if xticks:
        for t in xs.ticks():
            canvas.line(xs(t), y1, xs(t), y1 + 4)
            canvas.text(xs(t), y1 + 16, _tick(t), size=10)
    for t in ys.ticks():
        canvas.line(x0 - 4, ys(t), x0, ys(t))
        canvas.text(x0 - 6, ys(t) + 3, _tick(t), anchor="end", size=10)
    canvas.text((x0 + x1) / 2, canvas.height - 10, xlabel)
    canvas.text(16, (y0 + y1) / 2, ylabel, rotate=-90)


def _feature_range(model: FanovaModel, j: int, axis: np.ndarray) -> tuple[float, float]:
    if model.domain is not None:
        lo, hi = (float(v) for v in model.domain[j])
    elif axis.size:
        spread = float(axis[-1] - axis[0]) or 1.0
        lo, hi = float(axis[0]) - 0.1 * spread, float(axis[-1]) + 0.1 * spread
    else:
        lo, hi = 0.0, 1.0
    if axis.size:
        lo, hi = min(lo, float(axis[0])), max(hi, float(axis[-1]))
    return lo, hi


def _step_points(axis, values, lo, hi, xs, ys):
    edges = np.concatenate([[lo], np.clip(axis, lo, hi), [hi]])
    points = []
    for c, v in enumerate(values):
        points.append((xs(edges[c]), ys(v)))
        points.append((xs(edges[c + 1]), ys(v)))
    return points


def main_effect_svg(model: FanovaModel, key) -> str:
    """Step-function line plot of a main effect."""
    eff = model.effects[tuple(key)]
    (j,), (axis,) = eff.features, eff.axes
    lo, hi = _feature_range(model, j, axis)
    canvas = _Canvas(f"Main effect: {model.effect_name(eff.features)}")
    x0, y0, x1, y1 = canvas.plot_box
    xs = _Scale(lo, hi, x0, x1)
    vmin, vmax = float(eff.values.min()), float(eff.values.max())
    ys = _Scale(vmin, vmax, y1, y0)
    _axes(canvas, xs, ys, model.feature_names[j], "effect")
    if ys.lo < 0 < ys.hi:
        canvas.line(x0, ys(0), x1, ys(0), stroke="#999", dash="3,3")
    canvas.polyline(_step_points(axis, eff.values, lo, hi, xs, ys), PALETTE[0], 2.0)
    return canvas.render()


def _diverging(v: float, vmax: float) -> str:
    # white at 0, blue for negative, red for positive
    t = 0.0 if vmax == 0 else max(-1.0, min(1.0, v / vmax))
    if t >= 0:
        r, g, b = 255, round(255 * (1 - t)), round(255 * (1 - t))
    else:
        r, g, b = round(255 * (1 + t)), round(255 * (1 + t)), 255
    return f"#{r:02x}{g:02x}{b:02x}"


def pair_effect_svg(model: FanovaModel, key) -> str:
    """Cell heatmap of a pairwise effect with a colour scale symmetric around 0."""
    eff = model.effects[tuple(key)]
    (j, k), (ax_j, ax_k) = eff.features, eff.axes
    lo_j, hi_j = _feature_range(model, j, ax_j)
    lo_k, hi_k = _feature_range(model, k, ax_k)
    vmax = float(np.max(np.abs(eff.values)))
    meta = {
        "kind": "heatmap",
        "effect": list(eff.features),
        "color_scale": {"min": -vmax, "max": vmax, "center": 0.0, "negative": "blue", "positive": "red"},
    }
    canvas = _Canvas(f"Interaction: {model.effect_name(eff.features)}", width=WIDTH + 60, metadata=meta)
    x0, y0, x1, y1 = canvas.plot_box
    x1 -= 60
    xs = _Scale(lo_j, hi_j, x0, x1)
    ys = _Scale(lo_k, hi_k, y1, y0)
    ej = np.concatenate([[lo_j], np.clip(ax_j, lo_j, hi_j), [hi_j]])
    ek = np.concatenate([[lo_k], np.clip(ax_k, lo_k, hi_k), [hi_k]])
    for a in range(eff.shape[0]):
        for b in range(eff.shape[1]):
            v = float(eff.values[a, b])
            canvas.rect(
                xs(ej[a]), ys(ek[b + 1]), xs(ej[a + 1]) - xs(ej[a]), ys(ek[b]) - ys(ek[b + 1]),
                _diverging(v, vmax), title=f"{v:.4g}",
            )
    canvas.line(x0, y1, x1, y1)
    canvas.line(x0, y0, x0, y1)
    for t in xs.ticks():
        canvas.text(xs(t), y1 + 16, _tick(t), size=10)
    for t in ys.ticks():
        canvas.text(x0 - 6, ys(t) + 3, _tick(t), anchor="end", size=10)
    canvas.text((x0 + x1) / 2, canvas.height - 10, model.feature_names[j])
    canvas.text(16, (y0 + y1) / 2, model.feature_names[k], rotate=-90)
    # colour bar
    bar_x = x1 + 24
    steps = 20
    for s in range(steps):
        v = vmax - 2 * vmax * (s + 0.5) / steps
        canvas.rect(bar_x, y0 + (y1 - y0) * s / steps, 14, (y1 - y0) / steps + 0.5, _diverging(v, vmax))
    canvas.text(bar_x + 18, y0 + 4, _tick(vmax), anchor="start", size=10)
    canvas.text(bar_x + 18, (y0 + y1) / 2 + 3, "0", anchor="start", size=10)
    canvas.text(bar_x + 18, y1 + 4, _tick(-vmax), anchor="start", size=10)
    return canvas.render()


def triple_effect_svg(model: FanovaModel, key, n_levels: int = 2) -> str:
    """Step lines of a 3-way effect along its first feature.

    One line per combination of conditioning values for the other two features,
    taken at the midpoints of ``n_levels`` evenly spaced cells.
    """
    eff = model.effects[tuple(key)]
    j = eff.features[0]
    lo, hi = _feature_range(model, j, eff.axes[0])
    conditions = []
    for f, axis in zip(eff.features[1:], eff.axes[1:]):
        flo, fhi = _feature_range(model, f, axis)
        conditions.append([(f, float(v)) for v in np.linspace(flo, fhi, n_levels + 2)[1:-1]])
    canvas = _Canvas(f"3-way effect: {model.effect_name(eff.features)}", height=HEIGHT + 40)
    x0, y0, x1, y1 = canvas.plot_box
    y1 -= 40
    xs = _Scale(lo, hi, x0, x1)
    slices = []
    for combo in itertools.product(*conditions):
        idx = [slice(None)]
        for (f, v), axis in zip(combo, eff.axes[1:]):
            idx.append(int(np.searchsorted(axis, v, side="right")))
        slices.append((combo, eff.values[tuple(idx)]))
    allv = np.concatenate([s for _, s in slices])
    ys = _Scale(float(allv.min()), float(allv.max()), y1, y0)
    _axes(canvas, xs, ys, "", "effect")
    canvas.text((x0 + x1) / 2, y1 + 30, model.feature_names[j])
    for c, (combo, values) in enumerate(slices):
        color = PALETTE[c % len(PALETTE)]
        canvas.polyline(_step_points(eff.axes[0], values, lo, hi, xs, ys), color)
        label = ", ".join(f"{model.feature_names[f]}={v:.3g}" for f, v in combo)
        lx = x0 + (c % 2) * (x1 - x0) / 2
        ly = y1 + 46 + 12 * (c // 2)
        canvas.rect(lx, ly - 4, 10, 3, color)
        canvas.text(lx + 14, ly, label, anchor="start", size=10)
    return canvas.render()


def effect_svg(model: FanovaModel, key) -> str:
    arity = len(key)
    if arity == 1:
        return main_effect_svg(model, key)
    if arity == 2:
        return pair_effect_svg(model, key)
    return triple_effect_svg(model, key)


def bar_svg(labels, values, title: str, xlabel: str = "") -> str:
    """Horizontal bar chart, one bar per label, top to bottom in the given order."""
    labels = [str(s) for s in labels]
    values = [float(v) for v in values]
    row = 22
    height = MARGIN["top"] + MARGIN["bottom"] + row * max(len(values), 1)
    left = 24 + 7 * max((len(s) for s in labels), default=4)
    canvas = _Canvas(title, width=WIDTH + left - MARGIN["left"], height=height)
    x0, y0 = left, MARGIN["top"]
    x1 = canvas.width - MARGIN["right"]
    lo, hi = min(values + [0.0]), max(values + [0.0])
    xs = _Scale(lo, hi, x0, x1)
    zero = xs(0.0)
    for r, (name, v) in enumerate(zip(labels, values)):
        y = y0 + r * row + 3
        start, end = sorted((zero, xs(v)))
        canvas.rect(start, y, end - start, row - 6, PALETTE[0] if v >= 0 else PALETTE[1], title=f"{v:.6g}")
        canvas.text(x0 - 6, y + row / 2, name, anchor="end", size=11)
    y_end = y0 + row * max(len(values), 1)
    canvas.line(zero, y0, zero, y_end)
    for t in xs.ticks():
        canvas.text(xs(t), y_end + 16, _tick(t), size=10)
    if xlabel:
        canvas.text((x0 + x1) / 2, canvas.height - 8, xlabel)
    return canvas.render()


def path_svg(path: list, metric: str = "r2", chosen: float | None = None) -> str:
    """Regularization path: bars for the number of effects, a line for the CV metric.

    ``path`` holds dicts with ``lambda``, ``n_selected`` and ``cv_metric``.
    The x axis is log10(lambda), decreasing to the right.
    """
    canvas = _Canvas("Regularization path", width=WIDTH + 60, metadata={"kind": "path", "metric": metric})
    x0, y0, x1, y1 = canvas.plot_box
    x1 -= 40
    logs = [math.log10(e["lambda"]) for e in path]
    xs = _Scale(max(logs), min(logs), x0, x1)
    counts = [e["n_selected"] for e in path]
    left = _Scale(0.0, float(max(counts + [1])), y1, y0)
    cv = [e["cv_metric"] for e in path]
    right = _Scale(min(cv), max(cv), y1, y0)
    width = max((x1 - x0) / max(len(path), 1) * 0.7, 1.0)
    for lg, c in zip(logs, counts):
        canvas.rect(xs(lg) - width / 2, left(c), width, y1 - left(c), "#c6dbef")
    canvas.polyline([(xs(lg), right(v)) for lg, v in zip(logs, cv)], PALETTE[1], 2.0)
    if chosen is not None and chosen > 0:
        canvas.line(xs(math.log10(chosen)), y0, xs(math.log10(chosen)), y1, stroke="#555", dash="4,3")
    canvas.line(x0, y1, x1, y1)
    canvas.line(x0, y0, x0, y1)
    canvas.line(x1, y0, x1, y1)
    for t in xs.ticks():
        canvas.text(xs(t), y1 + 16, _tick(t), size=10)
    for t in left.ticks():
        canvas.text(x0 - 6, left(t) + 3, f"{t:.0f}", anchor="end", size=10)
    for t in right.ticks():
        canvas.text(x1 + 6, right(t) + 3, _tick(t), anchor="start", size=10)
    canvas.text((x0 + x1) / 2, canvas.height - 10, "log10(lambda)")
    canvas.text(16, (y0 + y1) / 2, "number of effects", rotate=-90)
    canvas.text(canvas.width - 12, (y0 + y1) / 2, f"CV {metric}", rotate=90)
    return canvas.render()
