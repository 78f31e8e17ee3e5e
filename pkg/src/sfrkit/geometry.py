"""Loudspeaker and microphone layouts, collocation grids, polar coordinates.

Positions are ``(n, 2)`` float arrays of ``(x, y)`` in metres.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

PLANAR_HALF_SIDE = 0.14
PLANAR_SPACING = 0.04
DUAL_OUTER_RADIUS = 0.12
DUAL_INNER_RADIUS = 0.10
NUM_LOUDSPEAKERS = 60
MAX_COORD = 100.0

LAYOUT_KINDS = ("planar64", "dual_circular", "loudspeaker_ring", "custom")


@dataclass(frozen=True)
class ArrayLayout:
    """Named set of positions with boundary (measurement) and interior subsets."""

    kind: str
    positions: np.ndarray
    boundary_index: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    interior_index: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))

    def __post_init__(self):
        if self.kind not in LAYOUT_KINDS:
            raise ValueError(f"unknown layout kind {self.kind!r}")
        pos = as_positions(self.positions)
        b = np.asarray(self.boundary_index, dtype=int)
        i = np.asarray(self.interior_index, dtype=int)
        n = len(pos)
        for idx in (b, i):
            if idx.size and (idx.min() < 0 or idx.max() >= n):
                raise ValueError("layout index out of range")
        if np.intersect1d(b, i).size:
            raise ValueError("boundary and interior index sets overlap")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "boundary_index", b)
        object.__setattr__(self, "interior_index", i)

    @property
    def boundary(self) -> np.ndarray:
        return self.positions[self.boundary_index]

    @property
    def interior(self) -> np.ndarray:
        return self.positions[self.interior_index]

    def select(self, which) -> np.ndarray:
        """Index array for ``"boundary"``, ``"interior"``, ``"all"`` or explicit indices."""
        if isinstance(which, str):
            if which == "boundary":
                return self.boundary_index
            if which == "interior":
                return self.interior_index
            if which == "all":
                return np.arange(len(self.positions))
            raise ValueError(f"unknown index set {which!r}")
        return np.asarray(which, dtype=int)


def as_positions(p) -> np.ndarray:
    """Coerce to a finite ``(n, 2)`` float array; a single point becomes ``(1, 2)``."""
    a = np.array(p, dtype=float)
    if a.ndim == 1 and a.shape[0] == 2:
        a = a[None, :]
    if a.ndim != 2 or a.shape[1] != 2:
        raise ValueError(f"positions must have shape (n, 2), got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("positions must be finite")
    if np.any(np.abs(a) > MAX_COORD):
        raise ValueError(f"positions must satisfy |x|, |y| <= {MAX_COORD} m")
    return a


def loudspeaker_ring(radius: float = 1.0) -> ArrayLayout:
    """The 60-loudspeaker ring; loudspeaker ``l`` (1-based) is row ``l - 1``."""
    if not radius > 0:
        raise ValueError(f"ring radius must be positive, got {radius}")
    ang = (2 * np.arange(1, NUM_LOUDSPEAKERS + 1) - 1) * np.pi / 60
    pos = np.column_stack([-radius * np.sin(ang), radius * np.cos(ang)])
    return ArrayLayout("loudspeaker_ring", pos)


def loudspeaker_position(index: int, radius: float = 1.0) -> np.ndarray:
    """Position of loudspeaker ``index`` (1..60) on a ring of the given radius."""
    if not 1 <= int(index) <= NUM_LOUDSPEAKERS:
        raise ValueError(f"loudspeaker index must be in 1..{NUM_LOUDSPEAKERS}, got {index}")
    return loudspeaker_ring(radius).positions[int(index) - 1]


def planar_array() -> ArrayLayout:
    """8 x 8 planar array, 0.04 m pitch; the 28 perimeter points form the boundary."""
    m = np.arange(64)
    x = -PLANAR_HALF_SIDE + PLANAR_SPACING * (m % 8)
    y = PLANAR_HALF_SIDE - PLANAR_SPACING * (m // 8)
    col, row = m % 8, m // 8
    edge = (col == 0) | (col == 7) | (row == 0) | (row == 7)
    return ArrayLayout("planar64", np.column_stack([x, y]), np.flatnonzero(edge), np.flatnonzero(~edge))


def circle_positions(radius: float, count: int = 30) -> np.ndarray:
    theta = 2 * np.pi * np.arange(count) / count
    return np.column_stack([-radius * np.sin(theta), radius * np.cos(theta)])


def dual_circular_array() -> ArrayLayout:
    """Two concentric 30-microphone circles; rows 0..29 exterior, 30..59 interior."""
    pos = np.vstack([circle_positions(DUAL_OUTER_RADIUS), circle_positions(DUAL_INNER_RADIUS)])
    return ArrayLayout("dual_circular", pos, np.arange(30), np.arange(30, 60))


def layout_by_name(kind: str) -> ArrayLayout:
    if kind == "planar64":
        return planar_array()
    if kind == "dual_circular":
        return dual_circular_array()
    raise ValueError(f"no built-in microphone layout {kind!r}")


def region_radius(layout: ArrayLayout) -> float:
    """Radius used in the truncation-order rule: half-side for planar, outer radius for circles."""
    if layout.kind == "planar64":
        return PLANAR_HALF_SIDE
    if layout.kind == "dual_circular":
        return DUAL_OUTER_RADIUS
    return float(np.max(np.hypot(*layout.boundary.T)))


@dataclass(frozen=True)
class Square:
    half_side: float
    center: tuple[float, float] = (0.0, 0.0)


@dataclass(frozen=True)
class Disk:
    radius: float
    center: tuple[float, float] = (0.0, 0.0)


def region_for(layout: ArrayLayout):
    if layout.kind == "planar64":
        return Square(PLANAR_HALF_SIDE)
    return Disk(region_radius(layout))


def collocation_grid(region, spacing: float) -> np.ndarray:
    """Uniform lattice anchored at the region's lower-left extent, masked to the region.

    Rows are ordered top to bottom (descending y), x ascending within a row,
    which reproduces the planar-array numbering for ``Square(0.14)`` at 0.04 m.
    """
    if not spacing > 0:
        raise ValueError(f"spacing must be positive, got {spacing}")
    extent = region.half_side if isinstance(region, Square) else region.radius
    if not extent > 0:
        raise ValueError("region extent must be positive")
    # tolerance keeps points that sit on the boundary up to rounding
    count = int(np.floor(2 * extent / spacing + 1e-9)) + 1
    ticks = -extent + spacing * np.arange(count)
    gx, gy = np.meshgrid(ticks, ticks[::-1])
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    if isinstance(region, Disk):
        r2 = region.radius ** 2
        pts = pts[np.sum(pts**2, axis=1) <= r2 * (1 + 1e-9)]
    if len(pts) == 0:
        raise ValueError("collocation grid is empty")
    return pts + np.asarray(region.center, dtype=float)


def to_polar(p) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(r, phi)`` with ``phi`` wrapped to ``[0, 2 pi)``; the origin maps to (0, 0)."""
    p = np.asarray(p, dtype=float)
    x, y = p[..., 0], p[..., 1]
    r = np.hypot(x, y)
    phi = np.mod(np.arctan2(y, x), 2 * np.pi)
    # mod can round -tiny up to exactly 2 pi
    phi = np.where(phi >= 2 * np.pi, 0.0, phi)
    return r, phi


def to_cartesian(r, phi) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    phi = np.asarray(phi, dtype=float)
    return np.stack([r * np.cos(phi), r * np.sin(phi)], axis=-1)
