"""Box-aware differentiable trajectory rasterizer.

A waypoint becomes a truncated 2D Gaussian over the grid: each cell holds the normalized
density ``N(d; 0, Σ(l, w, θ))`` at ``d = cell_center − (x, y)``, and cells farther than
``truncation_md`` Mahalanobis units are zeroed without renormalizing. The backward pass
gives analytic partials with respect to ``x``, ``y`` and ``θ`` only; ``l`` and ``w`` are
treated as constants and the truncation mask is held fixed.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional
from typing import Tuple

import numpy as np

from ..exceptions import InvalidArgumentError
from .geometry import DEFAULT_K
from .geometry import CellWindow
from .geometry import Covariance2
from .geometry import GridSpec
from .geometry import WaypointState
from .geometry import box_sigmas
from .geometry import covariance_from_sigmas
from .geometry import mahalanobis_sq


logger = logging.getLogger(__name__)

DEFAULT_TRUNCATION_MD = 1.0


@dataclass(frozen=True)
class GaussianRaster:
    """Truncated Gaussian occupancy over a window of the grid (values in 1/m²)."""

    grid: GridSpec
    window: CellWindow
    values: np.ndarray
    truncation_md: Optional[float] = DEFAULT_TRUNCATION_MD

    def to_dense(self) -> np.ndarray:
        dense = np.zeros(self.grid.shape)
        if not self.window.is_empty:
            dense[self.window.slices] = self.values
        return dense

    def total(self) -> float:
        return float(np.sum(self.values))

    def mass(self) -> float:
        """Probability mass captured by the grid: the value sum times the cell area."""
        return self.total() * self.grid.cell_area


@dataclass(frozen=True)
class RasterGrad:
    """Per-cell partials of a ``GaussianRaster`` over the same window.

    ``dx`` and ``dy`` are in 1/m³, ``dtheta`` in 1/m² per radian.
    """

    window: CellWindow
    dx: np.ndarray
    dy: np.ndarray
    dtheta: np.ndarray

    def weighted_sum(self, weights: np.ndarray) -> np.ndarray:
        """``(Σ w·∂G/∂x, Σ w·∂G/∂y, Σ w·∂G/∂θ)`` for weights shaped like the window."""
        return np.array([np.sum(self.dx * weights), np.sum(self.dy * weights), np.sum(self.dtheta * weights)])


def _check_params(k: float, truncation_md: Optional[float], fixed_sigma: Optional[float]) -> None:
    if not k > 0:
        raise InvalidArgumentError(f"Scale factor k must be positive, got {k}")
    if truncation_md is not None and not truncation_md > 0:
        raise InvalidArgumentError(f"Truncation radius must be positive or None, got {truncation_md}")
    if fixed_sigma is not None and not fixed_sigma > 0:
        raise InvalidArgumentError(f"Fixed sigma must be positive or None, got {fixed_sigma}")


def waypoint_sigmas(s: WaypointState, k: float = DEFAULT_K, fixed_sigma: Optional[float] = None) -> Tuple[float, float]:
    """Axis standard deviations of the raster Gaussian; isotropic when ``fixed_sigma`` is set."""
    if fixed_sigma is not None:
        return fixed_sigma, fixed_sigma
    return box_sigmas(s.l, s.w, k)


def waypoint_covariance(s: WaypointState, k: float = DEFAULT_K, fixed_sigma: Optional[float] = None) -> Covariance2:
    sigma_l, sigma_w = waypoint_sigmas(s, k, fixed_sigma)
    return covariance_from_sigmas(sigma_l, sigma_w, s.theta)


def truncation_bounds(
    s: WaypointState, k: float, truncation_md: float, fixed_sigma: Optional[float] = None
) -> Tuple[float, float, float, float]:
    """World-frame bounding box ``(x_min, x_max, y_min, y_max)`` of the truncation ellipse."""
    sigma = waypoint_covariance(s, k, fixed_sigma)
    half_x = truncation_md * math.sqrt(sigma.sxx)
    half_y = truncation_md * math.sqrt(sigma.syy)
    return s.x - half_x, s.x + half_x, s.y - half_y, s.y + half_y


def unclipped_window(
    s: WaypointState, grid: GridSpec, k: float, truncation_md: float, fixed_sigma: Optional[float] = None
) -> CellWindow:
    """Cell indices covered by the truncation bounding box; may extend past the grid."""
    x_min, x_max, y_min, y_max = truncation_bounds(s, k, truncation_md, fixed_sigma)
    return CellWindow(
        math.floor((x_min - grid.origin[0]) / grid.cell_l),
        math.floor((x_max - grid.origin[0]) / grid.cell_l) + 1,
        math.floor((y_min - grid.origin[1]) / grid.cell_w),
        math.floor((y_max - grid.origin[1]) / grid.cell_w) + 1,
    )


def raster_window(
    s: WaypointState,
    grid: GridSpec,
    k: float = DEFAULT_K,
    truncation_md: Optional[float] = DEFAULT_TRUNCATION_MD,
    fixed_sigma: Optional[float] = None,
) -> CellWindow:
    """Cells touched by the bounding box of the truncation ellipse, clipped to the grid.

    Without truncation the density is nonzero everywhere and the window is the whole grid.
    """
    _check_params(k, truncation_md, fixed_sigma)
    if truncation_md is None:
        return grid.full_window
    window = unclipped_window(s, grid, k, truncation_md, fixed_sigma)
    return grid.clip(window.i0, window.i1, window.j0, window.j1)


def _density(s: WaypointState, px, py, k: float, truncation_md: Optional[float], fixed_sigma: Optional[float]):
    sigma = waypoint_covariance(s, k, fixed_sigma)
    dx = np.asarray(px, dtype=float) - s.x
    dy = np.asarray(py, dtype=float) - s.y
    m = mahalanobis_sq(np.stack([dx, dy], axis=-1), sigma)
    norm = 1.0 / (2.0 * math.pi * math.sqrt(sigma.det))
    values = norm * np.exp(-0.5 * m)
    if truncation_md is not None:
        values = np.where(m <= truncation_md * truncation_md, values, 0.0)
    return values, dx, dy, sigma


def evaluate_density(
    s: WaypointState,
    px,
    py,
    k: float = DEFAULT_K,
    truncation_md: Optional[float] = DEFAULT_TRUNCATION_MD,
    fixed_sigma: Optional[float] = None,
) -> np.ndarray:
    """Truncated Gaussian density at world points ``(px, py)``."""
    _check_params(k, truncation_md, fixed_sigma)
    values, _, _, _ = _density(s, px, py, k, truncation_md, fixed_sigma)
    return values


def evaluate_density_grad(
    s: WaypointState,
    px,
    py,
    k: float = DEFAULT_K,
    truncation_md: Optional[float] = DEFAULT_TRUNCATION_MD,
    fixed_sigma: Optional[float] = None,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Density and its partials ``(G, ∂G/∂x, ∂G/∂y, ∂G/∂θ)`` at world points.

    ``∂G/∂(x, y) = G·Σ⁻¹d`` because ``d`` points from the waypoint to the cell;
    ``∂G/∂θ = G·u·v·(1/σ_w² − 1/σ_l²)`` with ``(u, v)`` the body-frame displacement.
    """
    _check_params(k, truncation_md, fixed_sigma)
    values, dx, dy, sigma = _density(s, px, py, k, truncation_md, fixed_sigma)
    ixx, ixy, iyy = sigma.inverse()
    grad_x = values * (ixx * dx + ixy * dy)
    grad_y = values * (ixy * dx + iyy * dy)
    if fixed_sigma is not None:
        grad_theta = np.zeros_like(values)
    else:
        sigma_l, sigma_w = waypoint_sigmas(s, k)
        c, sn = math.cos(s.theta), math.sin(s.theta)
        u = c * dx + sn * dy
        v = -sn * dx + c * dy
        grad_theta = values * u * v * (1.0 / (sigma_w * sigma_w) - 1.0 / (sigma_l * sigma_l))
    return values, grad_x, grad_y, grad_theta


def rasterize_waypoint(
    s: WaypointState,
    grid: GridSpec,
    k: float = DEFAULT_K,
    truncation_md: Optional[float] = DEFAULT_TRUNCATION_MD,
    fixed_sigma: Optional[float] = None,
) -> GaussianRaster:
    """Forward pass: the truncated Gaussian raster of one waypoint."""
    window = raster_window(s, grid, k, truncation_md, fixed_sigma)
    if window.is_empty:
        return GaussianRaster(grid, window, np.zeros(window.shape), truncation_md)
    px, py = grid.window_centers(window)
    values, _, _, _ = _density(s, px, py, k, truncation_md, fixed_sigma)
    return GaussianRaster(grid, window, values, truncation_md)


def rasterize_waypoint_grad(
    s: WaypointState,
    grid: GridSpec,
    k: float = DEFAULT_K,
    truncation_md: Optional[float] = DEFAULT_TRUNCATION_MD,
    fixed_sigma: Optional[float] = None,
) -> Tuple[GaussianRaster, RasterGrad]:
    """Forward pass plus per-cell partials with respect to ``(x, y, θ)``."""
    window = raster_window(s, grid, k, truncation_md, fixed_sigma)
    if window.is_empty:
        empty = np.zeros(window.shape)
        return GaussianRaster(grid, window, empty, truncation_md), RasterGrad(window, empty, empty, empty)
    px, py = grid.window_centers(window)
    values, grad_x, grad_y, grad_theta = evaluate_density_grad(s, px, py, k, truncation_md, fixed_sigma)
    return GaussianRaster(grid, window, values, truncation_md), RasterGrad(window, grad_x, grad_y, grad_theta)


def radial_gradient_profile(
    s: WaypointState,
    k: float = DEFAULT_K,
    angle: float = 0.0,
    max_md: float = 3.0,
    samples: int = 3001,
    fixed_sigma: Optional[float] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """``|∇_(x,y) G|`` of the untruncated density along a ray at world ``angle`` from the center.

    Returns the Mahalanobis radius of every sample and the gradient magnitude there.
    """
    if samples < 2 or not max_md > 0:
        raise InvalidArgumentError("Profile needs at least two samples and a positive radius")
    direction = np.array([math.cos(angle), math.sin(angle)])
    sigma = waypoint_covariance(s, k, fixed_sigma)
    unit_md = math.sqrt(mahalanobis_sq(direction, sigma))
    radii = np.linspace(0.0, max_md, samples)
    distances = radii / unit_md
    px = s.x + distances * direction[0]
    py = s.y + distances * direction[1]
    _, grad_x, grad_y, _ = evaluate_density_grad(s, px, py, k, None, fixed_sigma)
    return radii, np.hypot(grad_x, grad_y)


def peak_gradient_md(s: WaypointState, k: float = DEFAULT_K, angle: float = 0.0, **kwargs) -> float:
    """Mahalanobis radius where the sampled gradient magnitude peaks."""
    radii, magnitudes = radial_gradient_profile(s, k, angle, **kwargs)
    return float(radii[int(np.argmax(magnitudes))])
