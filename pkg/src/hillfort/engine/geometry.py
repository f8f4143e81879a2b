"""Segment and distance helpers shared by sighting and splash checks."""

from __future__ import annotations

import math


def distance(x0: float, y0: float, x1: float, y1: float) -> float:
    return math.hypot(x1 - x0, y1 - y0)


def segment_hits_cell(x0: float, y0: float, x1: float, y1: float, cx: int, cy: int) -> bool:
    """Slab test: does the open segment intersect the unit cell [cx,cx+1]x[cy,cy+1]?"""
    dx = x1 - x0
    dy = y1 - y0
    tmin, tmax = 0.0, 1.0
    for start, delta, lo, hi in ((x0, dx, cx, cx + 1), (y0, dy, cy, cy + 1)):
        if abs(delta) < 1e-12:
            if start < lo or start > hi:
                return False
            continue
        t0 = (lo - start) / delta
        t1 = (hi - start) / delta
        if t0 > t1:
            t0, t1 = t1, t0
        tmin = max(tmin, t0)
        tmax = min(tmax, t1)
        if tmin > tmax:
            return False
    return True


def sight_blocked(world, x0: float, y0: float, x1: float, y1: float, skip_building=None) -> bool:
    """True when a living sight-blocking building footprint crosses the
    segment between the two points.  The building being looked at is
    excluded via skip_building."""
    for b in world.buildings:
        if not b.alive or not b.blocks_sight or b is skip_building:
            continue
        for cx, cy in b.cells():
            if segment_hits_cell(x0, y0, x1, y1, cx, cy):
                return True
    return False
