"""Chiplet placements on a square interposer and the primitive motions on them.

All lengths are in mm. A placement is an immutable value: every motion
returns a new :class:`Placement` (or ``None`` when the motion would make
the placement illegal) and never touches its input.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

EPS = 1e-9

DIRECTIONS = ("left", "right", "up", "down")
_STEP = {"left": (-1.0, 0.0), "right": (1.0, 0.0), "up": (0.0, 1.0), "down": (0.0, -1.0)}


@dataclass(frozen=True)
class Chiplet:
    id: int
    width: float
    height: float
    power: float = 0.0
    rotated: bool = False
    name: str = ""

    def __post_init__(self):
        if not (self.width > 0 and self.height > 0):
            raise ValueError(f"chiplet {self.id}: width and height must be positive")
        if self.power < 0:
            raise ValueError(f"chiplet {self.id}: power must be nonnegative")

    @property
    def dims(self) -> tuple[float, float]:
        """Effective (width, height) with rotation applied."""
        if self.rotated:
            return self.height, self.width
        return self.width, self.height

    def toggled(self) -> "Chiplet":
        return replace(self, rotated=not self.rotated)


Rect = tuple[float, float, float, float]


def overlaps(a: Rect, b: Rect, tol: float = EPS) -> bool:
    """Positive-area intersection test for (x0, y0, x1, y1) rectangles.

    Shared edges do not count as overlap.
    """
    return (min(a[2], b[2]) - max(a[0], b[0]) > tol
            and min(a[3], b[3]) - max(a[1], b[1]) > tol)


def rect_at(chiplet: Chiplet, center: tuple[float, float]) -> Rect:
    w, h = chiplet.dims
    x, y = center
    return (x - w / 2, y - h / 2, x + w / 2, y + h / 2)


def inside(r: Rect, size: float, tol: float = EPS) -> bool:
    return r[0] >= -tol and r[1] >= -tol and r[2] <= size + tol and r[3] <= size + tol


@dataclass(frozen=True)
class Placement:
    chiplets: tuple[Chiplet, ...]
    centers: tuple[tuple[float, float], ...]
    interposer_size: float = 45.0

    def __post_init__(self):
        if len(self.chiplets) != len(self.centers):
            raise ValueError("one center per chiplet is required")
        object.__setattr__(self, "chiplets", tuple(self.chiplets))
        object.__setattr__(self, "centers", tuple((float(x), float(y)) for x, y in self.centers))

    @classmethod
    def build(cls, chiplets: Iterable[Chiplet], centers: Iterable[Sequence[float]],
              interposer_size: float = 45.0) -> "Placement":
        return cls(tuple(chiplets), tuple(tuple(c) for c in centers), interposer_size)

    def __len__(self):
        return len(self.chiplets)

    def rect(self, i: int) -> Rect:
        return rect_at(self.chiplets[i], self.centers[i])

    def rects(self) -> list[Rect]:
        return [self.rect(i) for i in range(len(self.chiplets))]

    def bounding_box(self) -> Rect:
        rs = np.array(self.rects())
        return (rs[:, 0].min(), rs[:, 1].min(), rs[:, 2].max(), rs[:, 3].max())

    def with_chiplet(self, i: int, chiplet: Chiplet, center: tuple[float, float]) -> "Placement":
        chiplets = list(self.chiplets)
        centers = list(self.centers)
        chiplets[i] = chiplet
        centers[i] = center
        return Placement(tuple(chiplets), tuple(centers), self.interposer_size)

    def translated(self, dx: float, dy: float) -> "Placement":
        return Placement(self.chiplets, tuple((x + dx, y + dy) for x, y in self.centers),
                         self.interposer_size)


def is_legal(p: Placement) -> bool:
    """True iff every chiplet is on the interposer and no two chiplets overlap."""
    rects = p.rects()
    if not all(inside(r, p.interposer_size) for r in rects):
        return False
    for i in range(len(rects)):
        for j in range(i + 1, len(rects)):
            if overlaps(rects[i], rects[j]):
                return False
    return True


def _fits(p: Placement, i: int, chiplet: Chiplet, center: tuple[float, float]) -> bool:
    r = rect_at(chiplet, center)
    if not inside(r, p.interposer_size):
        return False
    for j in range(len(p.chiplets)):
        if j != i and overlaps(r, p.rect(j)):
            return False
    return True


def try_move(p: Placement, chiplet_id: int, direction: str, d: float) -> Placement | None:
    """Translate one chiplet by ``d`` mm; ``None`` if the result is illegal."""
    if d <= 0:
        raise ValueError("move distance must be positive")
    ux, uy = _STEP[direction]
    x, y = p.centers[chiplet_id]
    target = (x + ux * d, y + uy * d)
    c = p.chiplets[chiplet_id]
    if not _fits(p, chiplet_id, c, target):
        return None
    return p.with_chiplet(chiplet_id, c, target)


def try_jump(p: Placement, chiplet_id: int, target_center: tuple[float, float],
             rotate: bool) -> Placement | None:
    """Relocate a chiplet (optionally turning it 90 degrees about its center)."""
    c = p.chiplets[chiplet_id]
    if rotate:
        c = c.toggled()
    target = (float(target_center[0]), float(target_center[1]))
    if not _fits(p, chiplet_id, c, target):
        return None
    return p.with_chiplet(chiplet_id, c, target)


def free_positions(p: Placement, chiplet_id: int, rotate: bool,
                   grid_pitch: float = 1.0) -> list[tuple[float, float]]:
    """Legal centers for a chiplet on a lattice anchored at the interposer corner.

    Lower-left corners sit on multiples of ``grid_pitch``. The chiplet's
    current center is excluded.
    """
    if grid_pitch <= 0:
        raise ValueError("grid_pitch must be positive")
    c = p.chiplets[chiplet_id].toggled() if rotate else p.chiplets[chiplet_id]
    w, h = c.dims
    size = p.interposer_size
    nx = int(np.floor((size - w) / grid_pitch + EPS)) + 1
    ny = int(np.floor((size - h) / grid_pitch + EPS)) + 1
    if nx <= 0 or ny <= 0:
        return []
    xs = np.arange(nx) * grid_pitch + w / 2
    ys = np.arange(ny) * grid_pitch + h / 2
    gx, gy = np.meshgrid(xs, ys, indexing="xy")
    gx = gx.ravel()
    gy = gy.ravel()
    ok = np.ones(gx.shape, dtype=bool)
    for j, (ox0, oy0, ox1, oy1) in enumerate(p.rects()):
        if j == chiplet_id:
            continue
        ix = np.minimum(gx + w / 2, ox1) - np.maximum(gx - w / 2, ox0)
        iy = np.minimum(gy + h / 2, oy1) - np.maximum(gy - h / 2, oy0)
        ok &= ~((ix > EPS) & (iy > EPS))
    cx, cy = p.centers[chiplet_id]
    ok &= ~((np.abs(gx - cx) <= EPS) & (np.abs(gy - cy) <= EPS))
    return [(float(x), float(y)) for x, y in zip(gx[ok], gy[ok])]
