"""Drivable-region polygons and their binary mask ``D`` (1 = drivable)."""

import logging
from dataclasses import dataclass
from dataclasses import field
from typing import Iterable
from typing import List
from typing import Optional
from typing import Sequence
from typing import Tuple

import numpy as np
import shapely

from ..exceptions import InvalidArgumentError
from ..exceptions import PolygonValidationError
from .geometry import CellWindow
from .geometry import GridSpec


logger = logging.getLogger(__name__)


def _as_ring(points: Sequence[Sequence[float]]) -> np.ndarray:
    ring = np.asarray(points, dtype=float).reshape(-1, 2)
    # Drop an explicit closing vertex
    if len(ring) > 1 and np.array_equal(ring[0], ring[-1]):
        ring = ring[:-1]
    return ring


def validate_ring(ring: np.ndarray, polygon_index: int, ring_name: str) -> None:
    """Reject rings with fewer than three vertices, non-finite points, zero area or self-intersections."""
    if len(ring) < 3:
        raise PolygonValidationError(
            f"Polygon {polygon_index} {ring_name} ring has {len(ring)} vertices; at least 3 are required",
            polygon_index,
            ring_name,
        )
    if not np.all(np.isfinite(ring)):
        raise PolygonValidationError(
            f"Polygon {polygon_index} {ring_name} ring has non-finite coordinates", polygon_index, ring_name
        )
    linear_ring = shapely.LinearRing(ring)
    if not linear_ring.is_simple:
        raise PolygonValidationError(
            f"Polygon {polygon_index} {ring_name} ring intersects itself", polygon_index, ring_name
        )
    if shapely.Polygon(ring).area <= 0.0:
        raise PolygonValidationError(
            f"Polygon {polygon_index} {ring_name} ring has zero area", polygon_index, ring_name
        )


@dataclass(frozen=True)
class Polygon:
    """A simple polygon with optional holes, in world meters."""

    exterior: np.ndarray
    holes: Tuple[np.ndarray, ...] = ()

    @classmethod
    def from_points(
        cls, exterior: Sequence[Sequence[float]], holes: Iterable[Sequence[Sequence[float]]] = ()
    ) -> "Polygon":
        return cls(_as_ring(exterior), tuple(_as_ring(hole) for hole in holes))

    @classmethod
    def rectangle(cls, x_min: float, y_min: float, x_max: float, y_max: float) -> "Polygon":
        return cls.from_points([(x_min, y_min), (x_max, y_min), (x_max, y_max), (x_min, y_max)])

    def rings(self) -> List[Tuple[str, np.ndarray]]:
        return [("exterior", self.exterior)] + [(f"hole {n}", hole) for n, hole in enumerate(self.holes)]

    def to_shapely(self) -> shapely.Polygon:
        return shapely.Polygon(self.exterior, [hole for hole in self.holes])


@dataclass(frozen=True)
class PolygonSet:
    """Union of drivable polygons."""

    polygons: Tuple[Polygon, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "polygons", tuple(self.polygons))

    def __len__(self) -> int:
        return len(self.polygons)

    def validate(self) -> "PolygonSet":
        """Check every ring; raises ``PolygonValidationError`` naming the first offending ring."""
        for index, polygon in enumerate(self.polygons):
            for name, ring in polygon.rings():
                validate_ring(ring, index, name)
        return self


@dataclass(frozen=True)
class DrivableMask:
    """Binary drivable grid; ``bits[i, j]`` is 1 where driving is permitted."""

    grid: GridSpec
    bits: np.ndarray

    def __post_init__(self):
        bits = np.asarray(self.bits)
        if bits.shape != self.grid.shape:
            raise InvalidArgumentError(f"Mask shape {bits.shape} does not match grid shape {self.grid.shape}")
        if not np.all((bits == 0) | (bits == 1)):
            raise InvalidArgumentError("Mask bits must be exactly 0 or 1")
        bits = bits.astype(np.uint8, copy=True)
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)

    @classmethod
    def filled(cls, grid: GridSpec, value: int) -> "DrivableMask":
        return cls(grid, np.full(grid.shape, value, dtype=np.uint8))

    def non_drivable(self, window: Optional[CellWindow] = None) -> np.ndarray:
        """``1 − D`` as float, optionally restricted to a window."""
        bits = self.bits if window is None else self.bits[window.slices]
        return 1.0 - bits.astype(float)

    @property
    def drivable_fraction(self) -> float:
        return float(self.bits.mean())


def _classify_ring(px: np.ndarray, py: np.ndarray, ring: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Even-odd containment and exact on-edge flags of points against one ring."""
    crossings = np.zeros(px.shape, dtype=bool)
    on_edge = np.zeros(px.shape, dtype=bool)
    for (x1, y1), (x2, y2) in zip(ring, np.roll(ring, -1, axis=0)):
        straddles = (y1 > py) != (y2 > py)
        if np.any(straddles):
            x_cross = x1 + (py[straddles] - y1) * (x2 - x1) / (y2 - y1)
            hit = np.zeros(px.shape, dtype=bool)
            hit[straddles] = px[straddles] < x_cross
            crossings ^= hit
        cross = (x2 - x1) * (py - y1) - (y2 - y1) * (px - x1)
        on_edge |= (
            (cross == 0.0)
            & (px >= min(x1, x2))
            & (px <= max(x1, x2))
            & (py >= min(y1, y2))
            & (py <= max(y1, y2))
        )
    return crossings, on_edge


def points_in_polygons(polys: PolygonSet, px: np.ndarray, py: np.ndarray) -> np.ndarray:
    """True where a point lies in the union of polygons minus holes; edge points count as inside."""
    px = np.asarray(px, dtype=float)
    py = np.asarray(py, dtype=float)
    inside = np.zeros(px.shape, dtype=bool)
    for polygon in polys.polygons:
        x_min, y_min = polygon.exterior.min(axis=0)
        x_max, y_max = polygon.exterior.max(axis=0)
        candidates = ~inside & (px >= x_min) & (px <= x_max) & (py >= y_min) & (py <= y_max)
        if not np.any(candidates):
            continue
        cx, cy = px[candidates], py[candidates]
        odd, edge = _classify_ring(cx, cy, polygon.exterior)
        covered = odd | edge
        for hole in polygon.holes:
            in_hole, on_hole = _classify_ring(cx, cy, hole)
            covered &= ~(in_hole & ~on_hole)
        inside[candidates] = covered
    return inside


def rasterize_drivable(polys: PolygonSet, grid: GridSpec) -> DrivableMask:
    """Mark every cell whose center lies in the drivable union."""
    polys.validate()
    ii, jj = np.meshgrid(np.arange(grid.n_l), np.arange(grid.n_w), indexing="ij")
    cx, cy = grid.cell_to_world(ii, jj)
    bits = points_in_polygons(polys, cx, cy).astype(np.uint8)
    logger.debug("Rasterized %d polygons onto %s grid: %.1f%% drivable", len(polys), grid.shape, 100 * bits.mean())
    return DrivableMask(grid, bits)


def drivable_at(mask: DrivableMask, points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Vectorized lookup for ``(..., 2)`` points: ``(in_range, drivable)``; drivable is False off-grid."""
    i, j, in_range = mask.grid.world_to_cells(points)
    drivable = np.zeros(in_range.shape, dtype=bool)
    drivable[in_range] = mask.bits[i[in_range], j[in_range]] == 1
    return in_range, drivable


def is_drivable_point(mask: DrivableMask, p: Sequence[float]) -> Optional[bool]:
    """Drivability of the cell containing ``p``; ``None`` when ``p`` is outside the grid."""
    cell = mask.grid.world_to_cell(float(p[0]), float(p[1]))
    if cell is None:
        return None
    return bool(mask.bits[cell] == 1)
