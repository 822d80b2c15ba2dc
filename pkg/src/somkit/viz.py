"""Static SVG plots and surface-data export.

Cells and bars are plain ``<rect>`` elements tagged ``class="cell"`` /
``class="bar"`` so the output can be checked structurally. Heatmaps blend
linearly between two fixed colours, ``LOW_COLOR`` at the grid minimum and
``HIGH_COLOR`` at the maximum.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional
from xml.sax.saxutils import escape

import numpy as np

from .core import SomModel
from .errors import DimensionError
from .preprocessing import denormalize

PLOT_KINDS = ("activation-heatmap", "umatrix-heatmap", "activation-bars", "surface-data", "codebook-tiles")
COLOR_SCALES = ("linear", "log1p")

LOW_COLOR = (255, 247, 236)
HIGH_COLOR = (127, 0, 0)

_MARGIN = 40
_LEGEND_W = 120


@dataclass(frozen=True)
class PlotSpec:
    kind: str
    color_scale: str = "linear"
    cell_size: int = 24
    output_path: Optional[str] = None
    title: Optional[str] = None

    def __post_init__(self):
        if self.kind not in PLOT_KINDS:
            raise ValueError(f"unknown plot kind {self.kind!r}; expected one of {PLOT_KINDS}")
        if self.color_scale not in COLOR_SCALES:
            raise ValueError(f"unknown colour scale {self.color_scale!r}")
        if int(self.cell_size) != self.cell_size or self.cell_size < 1:
            raise ValueError(f"cell size must be a positive integer, got {self.cell_size!r}")


def _hex(rgb) -> str:
    return "#{:02x}{:02x}{:02x}".format(*(int(c) for c in rgb))


def scale_positions(values, scale: str = "linear") -> np.ndarray:
    """Interpolation parameter in [0, 1] for each value (0 for a constant grid)."""
    v = np.asarray(values, dtype=np.float64)
    if scale == "log1p":
        if v.size and v.min() <= -1:
            raise ValueError("log1p scale needs values > -1")
        v = np.log1p(v)
    lo, hi = float(v.min()), float(v.max())
    if hi == lo:
        return np.zeros_like(v)
    return np.clip((v - lo) / (hi - lo), 0.0, 1.0)


def blend(t: float) -> str:
    rgb = [round(a + (b - a) * t) for a, b in zip(LOW_COLOR, HIGH_COLOR)]
    return _hex(rgb)


def _fmt(v) -> str:
    return f"{v:.6g}"


def _document(width, height, body, title=None):
    head = (
        '<?xml version="1.0" encoding="UTF-8"?>\n'
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{width}" height="{height}" viewBox="0 0 {width} {height}">\n'
    )
    if title:
        head += f"<title>{escape(title)}</title>\n"
    return head + "\n".join(body) + "\n</svg>\n"


def _grid_array(grid) -> np.ndarray:
    g = np.asarray(grid, dtype=np.float64)
    if g.size == 0:
        raise ValueError("cannot plot an empty grid")
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise ValueError(f"expected a square k x k grid, got shape {g.shape}")
    if not np.all(np.isfinite(g)):
        raise ValueError("grid values must be finite")
    return g


def _axis_labels(k, cs):
    out = []
    step = max(1, k // 20)
    for i in range(0, k, step):
        c = _MARGIN + i * cs + cs / 2
        out.append(f'<text class="axis" x="{c}" y="{_MARGIN - 6}" font-size="10" text-anchor="middle">{i}</text>')
        out.append(f'<text class="axis" x="{_MARGIN - 6}" y="{c + 3}" font-size="10" text-anchor="end">{i}</text>')
    out.append(f'<text x="{_MARGIN + k * cs / 2}" y="14" font-size="11" text-anchor="middle">col</text>')
    out.append(f'<text x="10" y="{_MARGIN + k * cs / 2}" font-size="11">row</text>')
    return out


def render_heatmap(grid, spec: PlotSpec) -> str:
    """Colour-coded ``k x k`` cell matrix with row/col axes and a min/max legend."""
    g = _grid_array(grid)
    k = g.shape[0]
    cs = spec.cell_size
    t = scale_positions(g, spec.color_scale)
    body = _axis_labels(k, cs)
    for r in range(k):
        for c in range(k):
            body.append(
                f'<rect class="cell" x="{_MARGIN + c * cs}" y="{_MARGIN + r * cs}" '
                f'width="{cs}" height="{cs}" fill="{blend(t[r, c])}" '
                f'data-row="{r}" data-col="{c}" data-value="{_fmt(g[r, c])}"/>'
            )
    lx = _MARGIN + k * cs + 20
    body += [
        f'<rect class="legend" x="{lx}" y="{_MARGIN}" width="16" height="16" fill="{blend(1.0)}"/>',
        f'<text x="{lx + 22}" y="{_MARGIN + 12}" font-size="11">max {_fmt(g.max())}</text>',
        f'<rect class="legend" x="{lx}" y="{_MARGIN + 24}" width="16" height="16" fill="{blend(0.0)}"/>',
        f'<text x="{lx + 22}" y="{_MARGIN + 36}" font-size="11">min {_fmt(g.min())}</text>',
        f'<text x="{lx}" y="{_MARGIN + 60}" font-size="10">scale: {spec.color_scale}</text>',
    ]
    size = _MARGIN + k * cs
    return _document(size + _LEGEND_W, size + 10, body, spec.title or spec.kind)


def render_bars(histogram: dict, spec: PlotSpec) -> str:
    """One bar per activation-count value, ascending, height ~ number of neurons."""
    if not histogram:
        raise ValueError("cannot plot an empty histogram")
    items = sorted((int(k), int(v)) for k, v in histogram.items())
    if any(v < 0 for _, v in items):
        raise ValueError("histogram entries must be non-negative")
    peak = max(v for _, v in items) or 1
    bw = spec.cell_size
    plot_h = 200
    body = []
    for i, (count, neurons) in enumerate(items):
        h = plot_h * neurons / peak
        x = _MARGIN + i * (bw + 4)
        body.append(
            f'<rect class="bar" x="{x}" y="{_fmt(_MARGIN + plot_h - h)}" width="{bw}" '
            f'height="{_fmt(h)}" fill="{_hex(HIGH_COLOR)}" '
            f'data-count="{count}" data-neurons="{neurons}"/>'
        )
        body.append(
            f'<text class="axis" x="{x + bw / 2}" y="{_MARGIN + plot_h + 14}" '
            f'font-size="10" text-anchor="middle">{count}</text>'
        )
    width = _MARGIN * 2 + len(items) * (bw + 4)
    body += [
        f'<line x1="{_MARGIN}" y1="{_MARGIN + plot_h}" x2="{width - _MARGIN}" '
        f'y2="{_MARGIN + plot_h}" stroke="black"/>',
        f'<text x="{_MARGIN}" y="{_MARGIN + plot_h + 32}" font-size="11">'
        "activations per neuron (bar height: number of neurons)</text>",
        f'<text x="{_MARGIN}" y="{_MARGIN - 8}" font-size="11">max {peak} neurons</text>',
    ]
    return _document(max(width, 360), _MARGIN + plot_h + 44, body, spec.title or spec.kind)


def surface_json(grid) -> str:
    """``{"side": k, "values": [...]}`` with values in row-major order."""
    raw = np.asarray(grid)
    g = _grid_array(raw)
    # Integer grids (activation counts) stay integers in the output.
    values = (raw if raw.dtype.kind in "iu" else g).reshape(-1).tolist()
    return json.dumps({"side": int(g.shape[0]), "values": values}, separators=(",", ":"), allow_nan=False)


def export_surface(grid, output_path) -> None:
    """Write the surface-data JSON for external 3-D tools."""
    Path(output_path).write_text(surface_json(grid) + "\n", encoding="utf-8")


def codebook_colors(model: SomModel) -> np.ndarray:
    """Denormalized weights as ``(k, k, 3)`` integer RGB, clamped to [0, 255]."""
    if model.dim != 3:
        raise DimensionError(3, model.dim, "codebook tiles need RGB weights; dimension")
    raw = denormalize(model.weights, model.normalization)
    rgb = np.clip(np.rint(raw), 0, 255).astype(np.int64)
    return rgb.reshape(model.side, model.side, 3)


def render_codebook_tiles(model: SomModel, spec: PlotSpec) -> str:
    rgb = codebook_colors(model)
    k = model.side
    cs = spec.cell_size
    body = _axis_labels(k, cs)
    for r in range(k):
        for c in range(k):
            body.append(
                f'<rect class="cell" x="{_MARGIN + c * cs}" y="{_MARGIN + r * cs}" '
                f'width="{cs}" height="{cs}" fill="{_hex(rgb[r, c])}" '
                f'data-row="{r}" data-col="{c}"/>'
            )
    size = _MARGIN + k * cs
    return _document(size + 10, size + 10, body, spec.title or spec.kind)


def write_svg(svg: str, output_path) -> None:
    Path(output_path).write_text(svg, encoding="utf-8")

