"""Grid terrain: two elevation levels plus passability."""

from __future__ import annotations

import numpy as np


class TerrainGrid:
    """Cell grid indexed [x, y].  Elevation is 0 (plain) or 1 (plateau);
    impassable cells reject movement for everyone."""

    def __init__(self, width: int, height: int):
        if width <= 0 or height <= 0:
            raise ValueError("terrain needs positive extents")
        self.width = width
        self.height = height
        self.elevation = np.zeros((width, height), dtype=np.int8)
        self.passable = np.ones((width, height), dtype=bool)

    def in_bounds(self, cx: int, cy: int) -> bool:
        return 0 <= cx < self.width and 0 <= cy < self.height

    def elevation_at(self, x: float, y: float) -> int:
        cx, cy = int(x), int(y)
        if not self.in_bounds(cx, cy):
            return 0
        return int(self.elevation[cx, cy])

    def passable_at(self, cx: int, cy: int) -> bool:
        return self.in_bounds(cx, cy) and bool(self.passable[cx, cy])

    def fill_elevation(self, x0: int, y0: int, x1: int, y1: int, level: int = 1) -> None:
        """Raise the half-open rectangle [x0, x1) x [y0, y1)."""
        self.elevation[x0:x1, y0:y1] = level

    def fill_impassable(self, x0: int, y0: int, x1: int, y1: int) -> None:
        self.passable[x0:x1, y0:y1] = False
