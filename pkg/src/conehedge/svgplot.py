"""Static SVG rendering of planar superhedging sets and step frontiers.

Unbounded sets are clipped to a padded view box around their vertices;
three-dimensional sets are drawn as axis-pair projections of their
generators.
"""

from __future__ import annotations

import numpy as np

from .geometry import Polyhedron, canonicalize

_W, _H, _PAD = 640, 480, 60


def _viewbox(points):
    pts = np.asarray(points)
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    span = np.maximum(hi - lo, 1e-6)
    lo = lo - 0.35 * span
    hi = hi + 0.35 * span
    return lo, hi


def _to_px(p, lo, hi):
    x = _PAD + (p[0] - lo[0]) / (hi[0] - lo[0]) * (_W - 2 * _PAD)
    y = _H - _PAD - (p[1] - lo[1]) / (hi[1] - lo[1]) * (_H - 2 * _PAD)
    return float(x), float(y)


def _polygon_chain(points, rays, lo, hi):
    """Vertices plus ray extensions, ordered around the boundary."""
    reach = 4.0 * float(np.max(hi - lo))
    ext = [np.asarray(p) for p in points]
    for r in rays:
        base = max(points, key=lambda p: float(np.asarray(p) @ np.asarray(r)))
        ext.append(np.asarray(base) + reach * np.asarray(r) / np.max(np.abs(r)))
    center = np.mean(ext, axis=0)
    ext.sort(key=lambda p: np.arctan2(p[1] - center[1], p[0] - center[0]))
    return ext


def _axes_svg(lo, hi, labels):
    rows = []
    ox, oy = _to_px((min(max(lo[0], 0.0), hi[0]), min(max(lo[1], 0.0), hi[1])), lo, hi)
    rows.append(f'<line x1="{_PAD}" y1="{oy:.1f}" x2="{_W - _PAD}" y2="{oy:.1f}" '
                'stroke="#999" stroke-width="1"/>')
    rows.append(f'<line x1="{ox:.1f}" y1="{_PAD}" x2="{ox:.1f}" y2="{_H - _PAD}" '
                'stroke="#999" stroke-width="1"/>')
    rows.append(f'<text x="{_W - _PAD + 6}" y="{oy + 4:.1f}" font-size="12">{labels[0]}</text>')
    rows.append(f'<text x="{ox + 6:.1f}" y="{_PAD - 8}" font-size="12">{labels[1]}</text>')
    return rows


def plot_polyhedron(poly: Polyhedron, axes=(0, 1), labels=None, title="") -> str:
    """SVG of a polyhedral set: 2D directly, higher dimensions projected
    onto the chosen coordinate pair."""
    poly = canonicalize(poly)
    pts, rays = poly.vrep()
    if poly.dim > 2:
        proj = Polyhedron.from_vrep(
            [np.asarray(p)[list(axes)] for p in pts],
            [np.asarray(r)[list(axes)] for r in rays
             if np.max(np.abs(np.asarray(r)[list(axes)])) > 1e-12],
            dim=2)
        proj = canonicalize(proj)
        pts, rays = proj.vrep()
    labels = labels or (f"x{axes[0]}", f"x{axes[1]}")
    lo, hi = _viewbox(pts)
    chain = _polygon_chain(pts, rays, lo, hi)
    path = " ".join(f"{x:.1f},{y:.1f}" for x, y in (_to_px(p, lo, hi) for p in chain))
    rows = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
            f'viewBox="0 0 {_W} {_H}">',
            f'<rect width="{_W}" height="{_H}" fill="white"/>',
            f'<text x="{_PAD}" y="24" font-size="14">{title}</text>']
    rows += _axes_svg(lo, hi, labels)
    rows.append(f'<polygon points="{path}" fill="#9ecae1" fill-opacity="0.55" '
                'stroke="#3182bd" stroke-width="1.5"/>')
    for p in pts:
        x, y = _to_px(p, lo, hi)
        rows.append(f'<circle cx="{x:.1f}" cy="{y:.1f}" r="3.5" fill="#08519c"/>')
        rows.append(f'<text x="{x + 6:.1f}" y="{y - 6:.1f}" font-size="11">'
                    f'({p[0]:.4g}, {p[1]:.4g})</text>')
    rows.append("</svg>")
    return "\n".join(rows)


def plot_frontier(points, title="") -> str:
    """SVG of a step frontier: withdrawal against trading cost, with the
    dominated region shaded upward."""
    xy = [(p["alpha"] if isinstance(p, dict) else p.alpha,
           p["trade_cost"] if isinstance(p, dict) else p.trade_cost)
          for p in points]
    lo, hi = _viewbox(np.asarray(xy))
    rows = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
            f'viewBox="0 0 {_W} {_H}">',
            f'<rect width="{_W}" height="{_H}" fill="white"/>',
            f'<text x="{_PAD}" y="24" font-size="14">{title}</text>']
    rows += _axes_svg(lo, hi, ("withdrawal", "trading cost"))
    order = sorted(xy)
    if len(order) > 1:
        path = " ".join(f"{x:.1f},{y:.1f}"
                        for x, y in (_to_px(p, lo, hi) for p in order))
        rows.append(f'<polyline points="{path}" fill="none" stroke="#31a354" '
                    'stroke-width="1.5"/>')
    for i, p in enumerate(order):
        x, y = _to_px(p, lo, hi)
        rows.append(f'<circle cx="{x:.1f}" cy="{y:.1f}" r="4" fill="#006d2c"/>')
        rows.append(f'<text x="{x + 6:.1f}" y="{y - 6:.1f}" font-size="11">'
                    f'({p[0]:.4g}, {p[1]:.4g})</text>')
    rows.append("</svg>")
    return "\n".join(rows)
