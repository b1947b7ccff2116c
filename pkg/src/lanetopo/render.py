"""Hand-written SVG 1.1 rendering of lane graphs and their minimal cycles."""
from __future__ import annotations

import numpy as np

from .arrangement import Arrangement

# 16 distinguishable fills, used in cycle sort order
PALETTE = (
    "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948", "#b07aa1", "#ff9da7",
    "#9c755f", "#bab0ac", "#1f77b4", "#aec7e8", "#98df8a", "#c5b0d5", "#c49c94", "#dbdb8d",
)


def _fmt(v: float) -> str:
    s = f"{v:.3f}"
    return "0.000" if s == "-0.000" else s


def render_svg(arr: Arrangement, size: int = 512, margin: int = 16,
               show_ids: bool = True, opacity: float = 0.55) -> str:
    """SVG text for ``arr``: one filled ``path.face`` per cycle, lanes on top.

    Normalized coordinates are flipped vertically so the far end of the FOV is
    at the top of the image.
    """
    span = size - 2 * margin

    def xy(p) -> str:
        return f"{_fmt(margin + p[0] * span)},{_fmt(margin + (1.0 - p[1]) * span)}"

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
        "<defs>",
        '<marker id="arrow" viewBox="0 0 10 10" refX="9" refY="5" markerWidth="6" '
        'markerHeight="6" orient="auto"><path d="M0,0 L10,5 L0,10 z" fill="#222"/></marker>',
        "</defs>",
        f'<rect x="0" y="0" width="{size}" height="{size}" fill="white"/>',
        '<g id="cycles">',
    ]
    for i, c in enumerate(arr.cycles):
        poly = np.asarray(c.polygon)
        d = "M" + " L".join(xy(p) for p in poly) + " Z"
        cover = " ".join(str(k) for k in sorted(c.cover))
        out.append(
            f'<path class="face" d="{d}" fill="{PALETTE[i % len(PALETTE)]}" '
            f'fill-opacity="{opacity}" stroke="none" data-cover="{cover}"/>'
        )
    out.append("</g>")
    out.append('<g id="boundary" fill="none" stroke="#555" stroke-width="1.5">')
    for c in arr.graph.boundaries:
        b = c.bezier
        out.append(f'<path d="M{xy(b.p0)} Q{xy(b.p1)} {xy(b.p2)}"/>')
    out.append("</g>")
    out.append('<g id="lanes" fill="none" stroke="#222" stroke-width="2">')
    for c in arr.graph.lanes:
        b = c.bezier
        out.append(
            f'<path class="lane" data-id="{c.id}" d="M{xy(b.p0)} Q{xy(b.p1)} {xy(b.p2)}" '
            'marker-end="url(#arrow)"/>'
        )
    out.append("</g>")
    if show_ids:
        out.append('<g id="labels" font-family="sans-serif" font-size="11" fill="#000">')
        for c in arr.graph.lanes:
            p = c.bezier.point(0.5)
            x, y = xy(p).split(",")
            out.append(f'<text x="{x}" y="{y}">{c.id}</text>')
        out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"
