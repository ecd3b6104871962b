"""Static SVG schematic of a solved pattern (combinatorial layout only)."""

from __future__ import annotations

import math
import re
from xml.sax.saxutils import escape, quoteattr

import numpy as np

from .graph import PatternGraph

_GRID_ID = re.compile(r"^f(\d+)_(\d+)$")


def _layout(g: PatternGraph) -> np.ndarray:
    cells = [_GRID_ID.match(fid) for fid in g.face_ids]
    if all(cells):
        ij = np.array([[int(m.group(1)), int(m.group(2))] for m in cells], dtype=float)
        if len({tuple(p) for p in ij.tolist()}) == g.n_faces:
            return ij * 120.0 + 80.0
    n = g.n_faces
    radius = max(120.0, 40.0 * n / math.pi)
    ang = 2.0 * math.pi * np.arange(n) / n
    return np.stack([radius * np.cos(ang), radius * np.sin(ang)], axis=1) + radius + 80.0


def render_svg(g: PatternGraph, k: np.ndarray, r: np.ndarray) -> str:
    pos = _layout(g)
    width, height = (pos.max(axis=0) + 80.0).tolist()
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0f}" height="{height:.0f}" '
        f'viewBox="0 0 {width:.0f} {height:.0f}">',
        '<g class="edges" stroke="#888" stroke-width="1.5">',
    ]
    for e, (a, b) in zip(g.edges, g.edge_sides.tolist()):
        if a == b:
            continue
        (x1, y1), (x2, y2) = pos[a], pos[b]
        out.append(
            f'<line x1="{x1:.1f}" y1="{y1:.1f}" x2="{x2:.1f}" y2="{y2:.1f}">'
            f"<title>{escape(e.id)} theta={e.theta:.6g}</title></line>"
        )
    out.append("</g>")
    out.append('<g class="faces" font-family="sans-serif" font-size="11" text-anchor="middle">')
    for i, fid in enumerate(g.face_ids):
        x, y = pos[i]
        rad = 10.0 + 30.0 * float(r[i]) / (0.5 * math.pi)
        out.append(f'<circle cx="{x:.1f}" cy="{y:.1f}" r="{rad:.1f}" fill="#cde" stroke="#345"/>')
        label = f"{fid} r={float(r[i]):.4g} k={float(k[i]):.4g}"
        out.append(f'<text class="face-label" data-face={quoteattr(fid)} x="{x:.1f}" y="{y + 4:.1f}">{escape(label)}</text>')
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"
