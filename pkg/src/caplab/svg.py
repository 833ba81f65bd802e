"""Minimal deterministic SVG emitter for line-field plots.

Line fields are drawn as unoriented segments; singularities are marked with
circles labeled by their twice-index.  Hand-rolled rather than a plotting
library so the output is byte-stable.
"""

from __future__ import annotations

import numpy as np


def line_field_svg(UU, VV, thetas, singularities=(), size=640, seg_frac=0.8):
    """SVG document for one or more angle fields over a parameter grid.

    thetas: list of (angle_array, color) layers; NaN angles are skipped.
    singularities: iterable of dicts {u, v, twice_index}.
    """
    u_lo, u_hi = float(np.min(UU)), float(np.max(UU))
    v_lo, v_hi = float(np.min(VV)), float(np.max(VV))
    span_u = max(u_hi - u_lo, 1e-12)
    span_v = max(v_hi - v_lo, 1e-12)
    margin = 20.0
    scale = (size - 2 * margin) / max(span_u, span_v)

    def to_px(u, v):
        return (margin + (u - u_lo) * scale, size - margin - (v - v_lo) * scale)

    n_u = UU.shape[0]
    cell = min(span_u / max(n_u - 1, 1), span_v / max(UU.shape[1] - 1, 1))
    half = 0.5 * seg_frac * cell * scale

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
        f'<rect width="{size}" height="{size}" fill="white"/>',
    ]
    for theta, color in thetas:
        for idx in np.ndindex(UU.shape):
            th = theta[idx]
            if not np.isfinite(th):
                continue
            cx, cy = to_px(float(UU[idx]), float(VV[idx]))
            dx, dy = half * np.cos(th), -half * np.sin(th)
            parts.append(
                f'<line x1="{cx - dx:.2f}" y1="{cy - dy:.2f}" '
                f'x2="{cx + dx:.2f}" y2="{cy + dy:.2f}" '
                f'stroke="{color}" stroke-width="1"/>'
            )
    for s in singularities:
        cx, cy = to_px(float(s["u"]), float(s["v"]))
        parts.append(f'<circle cx="{cx:.2f}" cy="{cy:.2f}" r="5" fill="none" stroke="red"/>')
        label = s.get("twice_index")
        if label is not None:
            parts.append(
                f'<text x="{cx + 7:.2f}" y="{cy - 7:.2f}" font-size="12" '
                f'fill="red">2i={label}</text>'
            )
    parts.append("</svg>")
    return "\n".join(parts)
