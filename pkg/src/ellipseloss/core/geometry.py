"""Actor-state and grid-geometry types shared by the rasterizer, losses and metrics.

Conventions
-----------
- World frame is metric, x to the right, y up; headings are radians counterclockwise
  from +x and are never normalized (all operations are 2π-periodic).
- Grid cells are indexed ``(i, j)`` with ``i`` along x (length, ``L``) and ``j``
  along y (width, ``W``); dense arrays are shaped ``(n_l, n_w)``.
- The covariance of a waypoint is ``R(θ)ᵀ diag(σ_l², σ_w²) R(θ)`` where ``R(θ)`` maps
  world to body frame and ``(σ_l, σ_w) = (k·l, k·w)``. The diagonal holds variances so
  that the unit Mahalanobis ellipse has radii ``σ_l`` and ``σ_w``.
"""

import math
from dataclasses import dataclass
from typing import Iterator
from typing import Optional
from typing import Sequence
from typing import Tuple

import numpy as np

from ..exceptions import AlignmentError
from ..exceptions import InvalidArgumentError
from ..exceptions import NumericalDegeneracyError


# Makes the unit Mahalanobis ellipse circumscribe the box
DEFAULT_K = math.sqrt(2.0) / 2.0

_INTEGRAL_TOLERANCE = 1e-9


@dataclass(frozen=True)
class WaypointState:
    """One predicted or ground-truth waypoint ``(x, y, l, w, θ)``."""

    x: float
    y: float
    l: float  # noqa: E741
    w: float
    theta: float

    def __post_init__(self):
        for name in ("x", "y", "l", "w", "theta"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise InvalidArgumentError(f"Waypoint field '{name}' must be finite, got {value}")
        if self.l <= 0 or self.w <= 0:
            raise InvalidArgumentError(f"Box dimensions must be positive, got l={self.l}, w={self.w}")

    @property
    def center(self) -> np.ndarray:
        return np.array([self.x, self.y], dtype=float)

    @property
    def pose(self) -> np.ndarray:
        """The differentiable part of the state, ``(x, y, θ)``."""
        return np.array([self.x, self.y, self.theta], dtype=float)

    def with_pose(self, x: float, y: float, theta: float) -> "WaypointState":
        """Return a copy with a new pose and the same box size."""
        return WaypointState(x=x, y=y, l=self.l, w=self.w, theta=theta)

    def as_tuple(self) -> Tuple[float, float, float, float, float]:
        return (self.x, self.y, self.l, self.w, self.theta)


@dataclass(frozen=True)
class Trajectory:
    """Ordered waypoints of one actor with a constant box size."""

    waypoints: Tuple[WaypointState, ...]
    timestep: float = 0.1

    def __post_init__(self):
        object.__setattr__(self, "waypoints", tuple(self.waypoints))
        if not self.waypoints:
            raise InvalidArgumentError("A trajectory needs at least one waypoint")
        if not (math.isfinite(self.timestep) and self.timestep > 0):
            raise InvalidArgumentError(f"Timestep must be positive, got {self.timestep}")
        first = self.waypoints[0]
        for index, waypoint in enumerate(self.waypoints):
            if waypoint.l != first.l or waypoint.w != first.w:
                raise InvalidArgumentError(f"Box size changes at waypoint {index}; it must stay constant")

    @classmethod
    def from_poses(
        cls, poses: Sequence[Sequence[float]], length: float, width: float, timestep: float = 0.1
    ) -> "Trajectory":
        """Build a trajectory from ``(x, y, θ)`` rows and one box size."""
        return cls(
            tuple(WaypointState(float(x), float(y), length, width, float(theta)) for x, y, theta in poses), timestep
        )

    def __len__(self) -> int:
        return len(self.waypoints)

    def __iter__(self) -> Iterator[WaypointState]:
        return iter(self.waypoints)

    def __getitem__(self, index: int) -> WaypointState:
        return self.waypoints[index]

    @property
    def length(self) -> float:
        return self.waypoints[0].l

    @property
    def width(self) -> float:
        return self.waypoints[0].w

    def as_array(self) -> np.ndarray:
        """Return a ``(T, 5)`` array of ``(x, y, l, w, θ)`` rows."""
        return np.array([waypoint.as_tuple() for waypoint in self.waypoints], dtype=float)


def check_alignment(preds: Sequence[Trajectory], gts: Sequence[Trajectory]) -> Tuple[int, int]:
    """Verify per-actor pairing and a shared horizon; returns ``(N, T_f)``."""
    if len(preds) != len(gts):
        raise AlignmentError(f"{len(preds)} predicted trajectories but {len(gts)} ground-truth trajectories")
    if not preds:
        raise AlignmentError("At least one actor is required")
    horizon = len(preds[0])
    for index, (pred, gt) in enumerate(zip(preds, gts)):
        if len(pred) != len(gt):
            raise AlignmentError(f"Actor {index}: prediction has {len(pred)} waypoints, ground truth {len(gt)}")
        if len(pred) != horizon:
            raise AlignmentError(f"Actor {index}: horizon {len(pred)} differs from {horizon}")
    return len(preds), horizon


@dataclass(frozen=True)
class CellWindow:
    """Half-open rectangle of cell indices ``[i0, i1) × [j0, j1)``."""

    i0: int
    i1: int
    j0: int
    j1: int

    @property
    def is_empty(self) -> bool:
        return self.i1 <= self.i0 or self.j1 <= self.j0

    @property
    def shape(self) -> Tuple[int, int]:
        return (max(self.i1 - self.i0, 0), max(self.j1 - self.j0, 0))

    @property
    def slices(self) -> Tuple[slice, slice]:
        return (slice(self.i0, self.i1), slice(self.j0, self.j1))

    def contains(self, other: "CellWindow") -> bool:
        """True when ``other`` lies inside this window (empty windows are contained everywhere)."""
        if other.is_empty:
            return True
        return self.i0 <= other.i0 and other.i1 <= self.i1 and self.j0 <= other.j0 and other.j1 <= self.j1


@dataclass(frozen=True)
class GridSpec:
    """Bird's-eye-view grid geometry."""

    length_m: float
    width_m: float
    cell_l: float
    cell_w: float
    origin: Tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "origin", (float(self.origin[0]), float(self.origin[1])))
        if self.cell_l <= 0 or self.cell_w <= 0:
            raise InvalidArgumentError(f"Cell sizes must be positive, got {self.cell_l} x {self.cell_w}")
        if self.length_m <= 0 or self.width_m <= 0:
            raise InvalidArgumentError(f"Grid extents must be positive, got {self.length_m} x {self.width_m}")
        for extent, cell, name in ((self.length_m, self.cell_l, "length"), (self.width_m, self.cell_w, "width")):
            count = extent / cell
            if abs(count - round(count)) > _INTEGRAL_TOLERANCE * max(1.0, count):
                raise InvalidArgumentError(f"Grid {name} {extent} m is not a whole number of {cell} m cells")

    @classmethod
    def centered(cls, length_m: float, width_m: float, cell_l: float, cell_w: Optional[float] = None) -> "GridSpec":
        """Grid whose center sits at the world origin."""
        return cls(length_m, width_m, cell_l, cell_w or cell_l, origin=(-length_m / 2.0, -width_m / 2.0))

    @property
    def n_l(self) -> int:
        return int(round(self.length_m / self.cell_l))

    @property
    def n_w(self) -> int:
        return int(round(self.width_m / self.cell_w))

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.n_l, self.n_w)

    @property
    def cell_area(self) -> float:
        return self.cell_l * self.cell_w

    @property
    def full_window(self) -> CellWindow:
        return CellWindow(0, self.n_l, 0, self.n_w)

    def cell_to_world(self, i, j):
        """World coordinates of the center of cell ``(i, j)``; accepts scalars or arrays."""
        x = self.origin[0] + (np.asarray(i, dtype=float) + 0.5) * self.cell_l
        y = self.origin[1] + (np.asarray(j, dtype=float) + 0.5) * self.cell_w
        if np.ndim(x) == 0 and np.ndim(y) == 0:
            return float(x), float(y)
        return x, y

    def world_to_cell(self, x: float, y: float) -> Optional[Tuple[int, int]]:
        """Cell containing ``(x, y)``, or ``None`` when the point lies outside the grid."""
        i = math.floor((x - self.origin[0]) / self.cell_l)
        j = math.floor((y - self.origin[1]) / self.cell_w)
        if 0 <= i < self.n_l and 0 <= j < self.n_w:
            return i, j
        return None

    def world_to_cells(self, points: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Vectorized ``world_to_cell`` for ``(..., 2)`` points: ``(i, j, in_range)``."""
        points = np.asarray(points, dtype=float)
        i = np.floor((points[..., 0] - self.origin[0]) / self.cell_l).astype(np.int64)
        j = np.floor((points[..., 1] - self.origin[1]) / self.cell_w).astype(np.int64)
        in_range = (i >= 0) & (i < self.n_l) & (j >= 0) & (j < self.n_w)
        return i, j, in_range

    def window_centers(self, window: CellWindow) -> Tuple[np.ndarray, np.ndarray]:
        """Cell-center coordinate arrays shaped like ``window``."""
        i = np.arange(window.i0, window.i1)
        j = np.arange(window.j0, window.j1)
        ii, jj = np.meshgrid(i, j, indexing="ij")
        return self.cell_to_world(ii, jj)

    def clip(self, i0: int, i1: int, j0: int, j1: int) -> CellWindow:
        """Clip an index rectangle to the grid."""
        return CellWindow(max(i0, 0), min(i1, self.n_l), max(j0, 0), min(j1, self.n_w))


@dataclass(frozen=True)
class Covariance2:
    """Symmetric 2×2 covariance ``[[sxx, sxy], [sxy, syy]]`` in m²."""

    sxx: float
    sxy: float
    syy: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.sxx, self.sxy, self.syy)):
            raise InvalidArgumentError("Covariance entries must be finite")

    @property
    def det(self) -> float:
        return self.sxx * self.syy - self.sxy * self.sxy

    @property
    def is_positive_definite(self) -> bool:
        return self.sxx > 0 and self.det > 0

    def as_array(self) -> np.ndarray:
        return np.array([[self.sxx, self.sxy], [self.sxy, self.syy]], dtype=float)

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.as_array())

    def inverse(self) -> Tuple[float, float, float]:
        """Entries ``(ixx, ixy, iyy)`` of Σ⁻¹."""
        if not self.is_positive_definite:
            raise NumericalDegeneracyError(f"Covariance {self.as_array().tolist()} is not positive definite")
        det = self.det
        return self.syy / det, -self.sxy / det, self.sxx / det


def rotation(theta: float) -> np.ndarray:
    """World-to-body rotation ``R(θ)``."""
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, s], [-s, c]])


def box_sigmas(l: float, w: float, k: float) -> Tuple[float, float]:  # noqa: E741
    """Per-axis standard deviations ``(k·l, k·w)``."""
    if l <= 0 or w <= 0:
        raise InvalidArgumentError(f"Box dimensions must be positive, got l={l}, w={w}")
    if k <= 0:
        raise InvalidArgumentError(f"Scale factor k must be positive, got {k}")
    return k * l, k * w


def covariance_from_sigmas(sigma_l: float, sigma_w: float, theta: float) -> Covariance2:
    """``R(θ)ᵀ diag(σ_l², σ_w²) R(θ)`` in doubled-angle form.

    Entries depend on θ only through ``2θ``, so ``Σ(θ + π)`` equals ``Σ(θ)`` up to the rounding of
    ``θ + π`` itself: a few ulp of ``σ_l²``.
    """
    var_l, var_w = sigma_l * sigma_l, sigma_w * sigma_w
    mean, half = 0.5 * (var_l + var_w), 0.5 * (var_l - var_w)
    c2, s2 = math.cos(2.0 * theta), math.sin(2.0 * theta)
    return Covariance2(sxx=mean + half * c2, sxy=half * s2, syy=mean - half * c2)


def covariance_from_state(l: float, w: float, theta: float, k: float = DEFAULT_K) -> Covariance2:  # noqa: E741
    """Covariance of the Gaussian raster for a box of size ``l × w`` heading ``θ``.

    The major eigenvector is ``(cos θ, sin θ)`` with eigenvalue ``(k·l)²``.
    """
    sigma_l, sigma_w = box_sigmas(l, w, k)
    return covariance_from_sigmas(sigma_l, sigma_w, theta)


def mahalanobis_sq(d, sigma: Covariance2):
    """Squared Mahalanobis distance ``dᵀ Σ⁻¹ d`` for one ``(2,)`` or many ``(..., 2)`` displacements."""
    ixx, ixy, iyy = sigma.inverse()
    d = np.asarray(d, dtype=float)
    dx, dy = d[..., 0], d[..., 1]
    value = ixx * dx * dx + 2.0 * ixy * dx * dy + iyy * dy * dy
    if np.ndim(value) == 0:
        return float(value)
    return value


def box_corners(s: WaypointState) -> np.ndarray:
    """Corners of the oriented box, counterclockwise starting front-left, as a ``(4, 2)`` array."""
    c, s_ = math.cos(s.theta), math.sin(s.theta)
    half_l, half_w = s.l / 2.0, s.w / 2.0
    body = np.array([[half_l, half_w], [-half_l, half_w], [-half_l, -half_w], [half_l, -half_w]])
    world = np.empty_like(body)
    world[:, 0] = s.x + c * body[:, 0] - s_ * body[:, 1]
    world[:, 1] = s.y + s_ * body[:, 0] + c * body[:, 1]
    return world
