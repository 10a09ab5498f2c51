"""Hand-written SVG figures: coverage trajectories and (y, v) safe-set slices.

Numbers are printed with fixed precision so a given run always renders
to the same bytes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .geometry import CIRCLE, Obstacle

AGENT_COLORS = ["#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2", "#7f7f7f"]
OBSTACLE_COLOR = "#d62728"
SP_COLOR = "#9e9e9e"
SAFE_COLOR = "#8fd18f"


def _n(v: float) -> str:
    s = f"{v:.2f}"
    return "0.00" if s == "-0.00" else s


@dataclass
class Frame:
    """Maps world meters onto a pixel box with y pointing up."""

    x0: float
    y0: float
    scale: float
    left: float
    top: float
    height: float

    @classmethod
    def fit(cls, lo, hi, width: float, left: float = 0.0, top: float = 0.0, pad: float = 2.0) -> "Frame":
        lo = np.asarray(lo, dtype=float) - pad
        hi = np.asarray(hi, dtype=float) + pad
        span = np.maximum(hi - lo, 1e-9)
        scale = width / max(span)
        return cls(float(lo[0]), float(lo[1]), float(scale), left, top, float(span[1] * scale))

    def px(self, x: float, y: float) -> tuple[str, str]:
        return _n(self.left + (x - self.x0) * self.scale), _n(self.top + self.height - (y - self.y0) * self.scale)

    def length(self, d: float) -> str:
        return _n(d * self.scale)


def _document(width: float, height: float, body: list[str]) -> str:
    head = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_n(width)}" height="{_n(height)}" '
        f'viewBox="0 0 {_n(width)} {_n(height)}">'
    )
    return "\n".join([head, f'<rect width="{_n(width)}" height="{_n(height)}" fill="white"/>', *body, "</svg>"]) + "\n"


def _obstacle_svg(obs: Obstacle, fr: Frame) -> str:
    if obs.kind == CIRCLE:
        cx, cy = fr.px(*obs.center)
        return f'<circle class="obstacle" cx="{cx}" cy="{cy}" r="{fr.length(obs.radius)}" fill="{OBSTACLE_COLOR}" fill-opacity="0.6"/>'
    x, y = fr.px(obs.center[0] - obs.length / 2, obs.center[1] + obs.width / 2)
    return (
        f'<rect class="obstacle" x="{x}" y="{y}" width="{fr.length(obs.length)}" '
        f'height="{fr.length(obs.width)}" fill="{OBSTACLE_COLOR}" fill-opacity="0.6"/>'
    )


def world_bounds(obstacles: Sequence[Obstacle], points: np.ndarray, positions: np.ndarray):
    pts = [np.asarray(points, dtype=float).reshape(-1, 2), np.asarray(positions, dtype=float).reshape(-1, 2)]
    for o in obstacles:
        half = np.array([o.radius, o.radius]) if o.kind == CIRCLE else np.array([o.length, o.width]) / 2
        pts.append(np.array([o.p - half, o.p + half]))
    allpts = np.concatenate(pts)
    allpts = allpts[np.all(np.isfinite(allpts), axis=1)]
    return allpts.min(axis=0), allpts.max(axis=0)


def coverage_panel(
    fr: Frame,
    obstacles: Sequence[Obstacle],
    points: np.ndarray,
    weights: np.ndarray,
    positions: np.ndarray,
    title: str = "",
) -> list[str]:
    """Obstacles, sample points and one ``<path>`` per agent with start cross and end circle.

    ``positions`` has shape ``(steps + 1, agents, 2)``.
    """
    out = []
    if title:
        tx = _n(fr.left + 4.0)
        out.append(f'<text x="{tx}" y="{_n(fr.top + 14)}" font-family="sans-serif" font-size="14">{title}</text>')
    out += [_obstacle_svg(o, fr) for o in obstacles]
    w = np.asarray(weights, dtype=float)
    wmax = float(w.max()) if len(w) and w.max() > 0 else 1.0
    for p, wi in zip(np.asarray(points).reshape(-1, 2), w):
        if wi <= 0:
            continue
        cx, cy = fr.px(*p)
        out.append(f'<circle class="sp" cx="{cx}" cy="{cy}" r="{_n(1.0 + 4.0 * wi / wmax)}" fill="{SP_COLOR}"/>')
    arm = 5.0
    for i in range(positions.shape[1]):
        color = AGENT_COLORS[i % len(AGENT_COLORS)]
        track = positions[:, i]
        track = track[np.all(np.isfinite(track), axis=1)]
        if len(track) == 0:
            continue
        coords = [fr.px(*q) for q in track]
        d = "M" + " L".join(f"{x} {y}" for x, y in coords)
        out.append(f'<path class="trajectory" d="{d}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        sx, sy = (float(v) for v in coords[0])
        out.append(
            f'<line class="start" x1="{_n(sx - arm)}" y1="{_n(sy - arm)}" x2="{_n(sx + arm)}" y2="{_n(sy + arm)}" '
            f'stroke="{color}" stroke-width="2"/>'
        )
        out.append(
            f'<line class="start" x1="{_n(sx - arm)}" y1="{_n(sy + arm)}" x2="{_n(sx + arm)}" y2="{_n(sy - arm)}" '
            f'stroke="{color}" stroke-width="2"/>'
        )
        ex, ey = coords[-1]
        out.append(f'<circle class="end" cx="{ex}" cy="{ey}" r="4.00" fill="none" stroke="{color}" stroke-width="2"/>')
    return out


def coverage_svg(obstacles, points, weights, positions, width: float = 600.0) -> str:
    lo, hi = world_bounds(obstacles, points, positions)
    fr = Frame.fit(lo, hi, width)
    return _document(width, fr.height, coverage_panel(fr, obstacles, points, weights, positions))


def compare_svg(panels: Sequence[tuple[str, Sequence[Obstacle], np.ndarray, np.ndarray, np.ndarray]],
                width: float = 480.0, gap: float = 20.0) -> str:
    """Side-by-side coverage panels sharing one world frame."""
    los, his = zip(*(world_bounds(o, p, pos) for _, o, p, _, pos in panels))
    lo, hi = np.min(los, axis=0), np.max(his, axis=0)
    body, height = [], 0.0
    for k, (title, obs, pts, w, pos) in enumerate(panels):
        fr = Frame.fit(lo, hi, width, left=k * (width + gap), top=20.0)
        height = fr.height + 20.0
        body += coverage_panel(fr, obs, pts, w, pos, title)
    return _document(len(panels) * width + (len(panels) - 1) * gap, height, body)


def safe_set_boundaries(r: float, K_v: float, y_max: float, n: int = 200):
    """Slice boundaries along the ray from the obstacle center.

    At distance ``y > r`` and radial velocity ``v`` (positive away from
    the obstacle), with the previous position equal to the current one,
    the velocity barrier reads ``y^2 - r^2 + K_v v / (y - r)``; its zero
    level is ``v = -(y^2 - r^2)(y - r) / K_v``.
    """
    y = np.linspace(r, y_max, n)
    v = -(y * y - r * r) * (y - r) / K_v if K_v > 0 else np.full_like(y, -np.inf)
    return y, v


def safeset_svg(r: float = 2.0, K_v: float = 5.0, y_max: float = 5.0, v_lim: float = 3.0,
                panel: float = 240.0, gap: float = 30.0) -> str:
    """Three (y, v) panels: position-barrier set, velocity-barrier set and their intersection."""
    margin = 30.0
    sx = panel / y_max
    sy = panel / (2 * v_lim)

    def pt(k, y, v):
        return _n(margin + k * (panel + gap) + y * sx), _n(margin + (v_lim - v) * sy)

    y, v = safe_set_boundaries(r, K_v, y_max)
    v = np.maximum(v, -v_lim)
    body = []
    titles = ["h1 &#8805; 0", "h2 &#8805; 0", "h1 &#8805; 0 and h2 &#8805; 0"]
    for k in range(3):
        ox, oy = pt(k, 0.0, v_lim)
        body.append(f'<rect x="{ox}" y="{oy}" width="{_n(panel)}" height="{_n(panel)}" fill="none" stroke="black"/>')
        body.append(f'<text x="{ox}" y="{_n(margin - 8)}" font-family="sans-serif" font-size="12">{titles[k]}</text>')
        if k == 0:
            poly = [(r, -v_lim), (y_max, -v_lim), (y_max, v_lim), (r, v_lim)]
        elif k == 1:
            # inside the obstacle the denominator floor makes the set v >= 0 (to within eps)
            poly = [(0.0, 0.0)] + list(zip(y, v)) + [(y_max, v_lim), (0.0, v_lim)]
        else:
            poly = list(zip(y, v)) + [(y_max, v_lim), (r, v_lim)]
        d = "M" + " L".join("{} {}".format(*pt(k, a, b)) for a, b in poly) + " Z"
        body.append(f'<path class="safe" d="{d}" fill="{SAFE_COLOR}" fill-opacity="0.7" stroke="none"/>')
        if k != 0:
            d = "M" + " L".join("{} {}".format(*pt(k, a, b)) for a, b in zip(y, v))
            body.append(f'<path class="h2-boundary" d="{d}" fill="none" stroke="#2e7d32" stroke-width="1.5"/>')
        lx, ly0 = pt(k, r, v_lim)
        _, ly1 = pt(k, r, -v_lim)
        body.append(f'<line class="h1-boundary" x1="{lx}" y1="{ly0}" x2="{lx}" y2="{ly1}" stroke="{OBSTACLE_COLOR}"/>')
        bx, by = pt(k, y_max, -v_lim)
        body.append(f'<text x="{bx}" y="{_n(float(by) + 16)}" text-anchor="end" font-family="sans-serif" font-size="11">y [m]</text>')
        body.append(f'<text x="{ox}" y="{_n(float(by) + 16)}" font-family="sans-serif" font-size="11">v [m/s]: {_n(-v_lim)} to {_n(v_lim)}</text>')
        zx0, zy = pt(k, 0.0, 0.0)
        zx1, _ = pt(k, y_max, 0.0)
        body.append(f'<line class="axis" x1="{zx0}" y1="{zy}" x2="{zx1}" y2="{zy}" stroke="#555" stroke-dasharray="3 3"/>')
    width = 2 * margin + 3 * panel + 2 * gap
    return _document(width, 2 * margin + panel + 10, body)
