"""Static SVG rendering of a laid-out graph.

One circle per node, one line per edge of the original graph, inside a
viewBox fitted to the layout with a 5% margin. Degenerate layouts (all
nodes coincident) fall back to a unit extent so the viewBox stays positive.
The vertical axis is flipped so mathematical y-up appears up on screen.
"""

from __future__ import annotations

from dataclasses import dataclass

from .graphs import Graph
from .validation import check_layout


@dataclass(frozen=True)
class SvgStyle:
    width: int = 640
    node_fill: str = "#26547c"
    edge_stroke: str = "#9aa5b1"
    background: str = "#ffffff"
    node_radius_frac: float = 0.015
    edge_width_frac: float = 0.004


def _fmt(v: float) -> str:
    return f"{v:.6f}".rstrip("0").rstrip(".")


def render_svg(g: Graph, x, style: SvgStyle = SvgStyle()) -> str:
    """Well-formed standalone SVG text for the layout of g."""
    x = check_layout(x, g.n)
    xs = x[:, 0]
    ys = -x[:, 1]  # SVG y grows downward
    xmin, xmax = float(xs.min()), float(xs.max())
    ymin, ymax = float(ys.min()), float(ys.max())
    extent = max(xmax - xmin, ymax - ymin)
    if extent <= 0.0:
        extent = 1.0  # minimum-extent guard for coincident layouts
    pad = 0.05 * extent
    vb_x, vb_y = xmin - pad, ymin - pad
    vb_w = (xmax - xmin) + 2.0 * pad
    vb_h = (ymax - ymin) + 2.0 * pad
    vb_w = max(vb_w, extent * 0.1)
    vb_h = max(vb_h, extent * 0.1)
    height = int(round(style.width * vb_h / vb_w))
    radius = style.node_radius_frac * extent
    stroke_w = style.edge_width_frac * extent

    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{style.width}" height="{max(height, 1)}" '
        f'viewBox="{_fmt(vb_x)} {_fmt(vb_y)} {_fmt(vb_w)} {_fmt(vb_h)}">',
        f'<rect x="{_fmt(vb_x)}" y="{_fmt(vb_y)}" width="{_fmt(vb_w)}" height="{_fmt(vb_h)}" fill="{style.background}"/>',
    ]
    for u, v in g.edges:
        lines.append(
            f'<line x1="{_fmt(xs[u])}" y1="{_fmt(ys[u])}" x2="{_fmt(xs[v])}" y2="{_fmt(ys[v])}" '
            f'stroke="{style.edge_stroke}" stroke-width="{_fmt(stroke_w)}"/>'
        )
    for i in range(g.n):
        lines.append(f'<circle cx="{_fmt(xs[i])}" cy="{_fmt(ys[i])}" r="{_fmt(radius)}" fill="{style.node_fill}"/>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
