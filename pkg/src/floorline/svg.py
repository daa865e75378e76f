"""Static SVG overlays of recognized floor-level lines, colored by order."""

from __future__ import annotations

from .io_formats import ImageLines

#: Stroke color per floor order (order 1 first).
ORDER_COLORS = (
    "orange",
    "green",
    "royalblue",
    "red",
    "purple",
    "saddlebrown",
    "magenta",
    "darkcyan",
    "olive",
    "teal",
)


def order_color(order: int) -> str:
    return ORDER_COLORS[(order - 1) % len(ORDER_COLORS)]


def render_overlay(result: ImageLines, width: int, height: int, stroke_width: float = 3.0) -> str:
    """Deterministic SVG text: one <line> per recognized floor-level line."""
    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f"<!-- floor-level lines for {result.image} -->",
    ]
    for fac in result.facades:
        parts.append(f'<g id="facade-{fac.facade_id}" data-orientation="{fac.orientation}">')
        for ln in fac.lines:
            parts.append(
                f'<line x1="{ln.xs:g}" y1="{ln.ys:g}" x2="{ln.xe:g}" y2="{ln.ye:g}" '
                f'stroke="{order_color(ln.order)}" stroke-width="{stroke_width:g}" '
                f'data-order="{ln.order}" />'
            )
        parts.append("</g>")
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
