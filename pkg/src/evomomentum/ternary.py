"""Deterministic SVG ternary plots of three-type trajectories."""
from __future__ import annotations

import math
from pathlib import Path
from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

from .exceptions import DimensionError

WIDTH = 800
HEIGHT = 693
SIDE = 600.0
SQRT3_2 = math.sqrt(3.0) / 2.0
LEFT = (WIDTH - SIDE) / 2.0
# bottom edge placed so the triangle is vertically centred
BASELINE = HEIGHT - (HEIGHT - SIDE * SQRT3_2) / 2.0

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf")


def barycentric_to_cartesian(x) -> np.ndarray:
    """Map simplex coordinates to the unit-side triangle.

    Vertex 1 sits at (0, 0), vertex 2 at (1, 0), vertex 3 at (1/2, sqrt(3)/2).
    Accepts one point or an ``(m, 3)`` array.
    """
    arr = np.asarray(x, dtype=np.float64)
    if arr.shape[-1] != 3:
        raise DimensionError(f"ternary plots need 3 coordinates, got {arr.shape[-1]}")
    u = arr[..., 1] + arr[..., 2] / 2.0
    v = SQRT3_2 * arr[..., 2]
    return np.stack([u, v], axis=-1)


def to_pixels(uv: np.ndarray) -> np.ndarray:
    uv = np.asarray(uv, dtype=np.float64)
    return np.stack([LEFT + SIDE * uv[..., 0], BASELINE - SIDE * uv[..., 1]], axis=-1)


def _fmt(v: float) -> str:
    text = f"{v:.3f}"
    return "0.000" if text == "-0.000" else text


def _points(px: np.ndarray) -> str:
    return " ".join(f"{_fmt(p[0])},{_fmt(p[1])}" for p in px)


def render_ternary_svg(
    trajectories: Sequence, path, labels: Sequence[str] = (), vertex_labels=("x1", "x2", "x3")
) -> str:
    """Draw each trajectory as a polyline inside the simplex triangle.

    ``trajectories`` may hold :class:`~evomomentum.dynamics.Trajectory`
    objects or plain ``(m, 3)`` arrays. Only finite on-simplex rows are drawn.
    Output bytes depend only on the inputs. Returns the SVG text.
    """
    arrays = []
    for traj in trajectories:
        states = np.asarray(getattr(traj, "states", traj), dtype=np.float64)
        if states.ndim != 2 or states.shape[1] != 3:
            raise DimensionError(f"ternary plots need n = 3, got shape {states.shape}")
        ok = np.all(np.isfinite(states), axis=1) & np.all(states >= 0.0, axis=1)
        arrays.append(states[ok])
    labels = list(labels) + [f"trajectory {i + 1}" for i in range(len(labels), len(arrays))]

    corners = to_pixels(barycentric_to_cartesian(np.eye(3)))
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<polygon points="{_points(corners)}" fill="none" stroke="black" stroke-width="1.5"/>',
    ]
    offsets = ((-14.0, 18.0), (14.0, 18.0), (0.0, -10.0))
    anchors = ("end", "start", "middle")
    for (cx, cy), (dx, dy), anchor, name in zip(corners, offsets, anchors, vertex_labels):
        out.append(
            f'<text x="{_fmt(cx + dx)}" y="{_fmt(cy + dy)}" font-family="sans-serif" '
            f'font-size="16" text-anchor="{anchor}">{escape(str(name))}</text>'
        )
    for i, states in enumerate(arrays):
        color = PALETTE[i % len(PALETTE)]
        if len(states) == 0:
            continue
        px = to_pixels(barycentric_to_cartesian(states))
        out.append(
            f'<polyline points="{_points(px)}" fill="none" stroke="{color}" stroke-width="1.2"/>'
        )
        out.append(f'<circle cx="{_fmt(px[0][0])}" cy="{_fmt(px[0][1])}" r="3" fill="{color}"/>')
    for i, label in enumerate(labels[: len(arrays)]):
        color = PALETTE[i % len(PALETTE)]
        y = 24.0 + 20.0 * i
        out.append(f'<line x1="16" y1="{_fmt(y - 5)}" x2="40" y2="{_fmt(y - 5)}" stroke="{color}" stroke-width="2"/>')
        out.append(
            f'<text x="48" y="{_fmt(y)}" font-family="sans-serif" font-size="14">{escape(str(label))}</text>'
        )
    out.append("</svg>")
    text = "\n".join(out) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text
