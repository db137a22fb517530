"""Tests for the box-aware Gaussian rasterizer and its analytic gradients."""

import math

import numpy as np
import pytest

from ellipseloss.core.bdtr import evaluate_density
from ellipseloss.core.bdtr import evaluate_density_grad
from ellipseloss.core.bdtr import peak_gradient_md
from ellipseloss.core.bdtr import radial_gradient_profile
from ellipseloss.core.bdtr import raster_window
from ellipseloss.core.bdtr import rasterize_waypoint
from ellipseloss.core.bdtr import rasterize_waypoint_grad
from ellipseloss.core.bdtr import waypoint_covariance
from ellipseloss.core.geometry import DEFAULT_K
from ellipseloss.core.geometry import GridSpec
from ellipseloss.core.geometry import Trajectory
from ellipseloss.core.geometry import WaypointState
from ellipseloss.core.geometry import covariance_from_state
from ellipseloss.core.geometry import mahalanobis_sq
from ellipseloss.core.losses import ellipse_loss
from ellipseloss.core.losses import ellipse_term
from ellipseloss.core.map_raster import Polygon
from ellipseloss.core.map_raster import PolygonSet
from ellipseloss.core.map_raster import rasterize_drivable
from ellipseloss.exceptions import InvalidArgumentError


H = 1e-5


def random_state(rng, spread=3.0):
    l, w = rng.uniform(1.0, 5.0, size=2)  # noqa: E741
    x, y = rng.uniform(-spread, spread, size=2)
    return WaypointState(x, y, l, w, rng.uniform(-math.pi, math.pi))


def full_grid_density(s, grid, k=DEFAULT_K, truncation_md=1.0):
    """Density evaluated cell by cell over the whole grid."""
    ii, jj = np.meshgrid(np.arange(grid.n_l), np.arange(grid.n_w), indexing="ij")
    px, py = grid.cell_to_world(ii, jj)
    return evaluate_density(s, px, py, k, truncation_md)


def cellwise_density(s, grid, k=DEFAULT_K, truncation_md=1.0):
    """Scalar cell-by-cell evaluation with the rasterizer's rounding: closed-form Σ, one vectorized exp."""
    var_l, var_w = (k * s.l) * (k * s.l), (k * s.w) * (k * s.w)
    mean, half = 0.5 * (var_l + var_w), 0.5 * (var_l - var_w)
    c2, s2 = math.cos(2.0 * s.theta), math.sin(2.0 * s.theta)
    sxx, sxy, syy = mean + half * c2, half * s2, mean - half * c2
    det = sxx * syy - sxy * sxy
    ixx, ixy, iyy = syy / det, -sxy / det, sxx / det
    norm = 1.0 / (2.0 * math.pi * math.sqrt(det))
    exponents, inside = [], []
    for i in range(grid.n_l):
        for j in range(grid.n_w):
            dx = (grid.origin[0] + (i + 0.5) * grid.cell_l) - s.x
            dy = (grid.origin[1] + (j + 0.5) * grid.cell_w) - s.y
            m = ixx * dx * dx + 2.0 * ixy * dx * dy + iyy * dy * dy
            exponents.append(-0.5 * m)
            inside.append(m <= truncation_md * truncation_md)
    values = norm * np.exp(np.array(exponents))
    return np.where(np.array(inside), values, 0.0).reshape(grid.shape)


def rotated_half_plane(grid, angle):
    """Mask drivable on the side of the line through the origin opposite to the unit normal at ``angle``."""
    normal = np.array([math.cos(angle), math.sin(angle)])
    tangent = np.array([-normal[1], normal[0]])
    corners = ((-1, 0), (1, 0), (1, 1), (-1, 1))
    ring = [tuple(-20 * normal + a * 20 * tangent + b * 20 * normal) for a, b in corners]
    return rasterize_drivable(PolygonSet((Polygon.from_points(ring),)), grid), normal


def formula_density(s, px, py, k=DEFAULT_K, truncation_md=1.0):
    """Independent evaluation of the truncated normal density with numpy linear algebra."""
    c, sn = math.cos(s.theta), math.sin(s.theta)
    rot = np.array([[c, sn], [-sn, c]])
    sigma = rot.T @ np.diag([(k * s.l) ** 2, (k * s.w) ** 2]) @ rot
    inv = np.linalg.inv(sigma)
    d = np.stack([np.asarray(px) - s.x, np.asarray(py) - s.y], axis=-1)
    m = np.einsum("...i,ij,...j->...", d, inv, d)
    values = np.exp(-0.5 * m) / (2 * math.pi * math.sqrt(np.linalg.det(sigma)))
    if truncation_md is not None:
        values = np.where(m <= truncation_md**2, values, 0.0)
    return values


def points_inside(rng, s, n, max_md=0.95):
    """Random points whose Mahalanobis radius from ``s`` is at most ``max_md``."""
    sigma = waypoint_covariance(s)
    chol = np.linalg.cholesky(sigma.as_array())
    r = rng.uniform(0.0, max_md, size=n)
    phi = rng.uniform(0.0, 2 * math.pi, size=n)
    d = (chol @ np.vstack([r * np.cos(phi), r * np.sin(phi)])).T
    return s.x + d[:, 0], s.y + d[:, 1]


class TestRasterizeWaypoint:
    """Forward pass."""

    def test_value_at_mean(self):
        grid = GridSpec(11.0, 11.0, 1.0, 1.0, origin=(-5.5, -5.5))
        raster = rasterize_waypoint(WaypointState(0.0, 0.0, 4.0, 2.0, 0.0), grid)
        assert raster.to_dense()[5, 5] == pytest.approx(1.0 / (8.0 * math.pi), rel=1e-12)

    def test_zero_outside_truncation(self):
        s = WaypointState(0.0, 0.0, 4.0, 2.0, 0.0)
        # Mahalanobis radius 1.5 along the major axis
        x = 1.5 * 2 * math.sqrt(2.0)
        assert mahalanobis_sq((x, 0.0), covariance_from_state(4.0, 2.0, 0.0)) == pytest.approx(2.25)
        assert evaluate_density(s, x, 0.0, truncation_md=1.0) == 0.0
        assert evaluate_density(s, x, 0.0, truncation_md=None) > 0.0

    def test_matches_cellwise_evaluation_bit_exact(self):
        rng = np.random.default_rng(2024)
        grid = GridSpec.centered(6.4, 6.4, 0.1)
        assert grid.shape == (64, 64)
        for _ in range(200):
            s = random_state(rng)
            np.testing.assert_array_equal(rasterize_waypoint(s, grid).to_dense(), cellwise_density(s, grid))

    def test_quarter_turn_about_grid_center(self):
        rng = np.random.default_rng(90)
        grid = GridSpec.centered(6.4, 6.4, 0.1)
        for _ in range(50):
            s = random_state(rng, spread=1.0)
            turned = WaypointState(-s.y, s.x, s.l, s.w, s.theta + math.pi / 2)
            a = rasterize_waypoint(s, grid, truncation_md=None).to_dense()
            b = rasterize_waypoint(turned, grid, truncation_md=None).to_dense()
            np.testing.assert_allclose(b, np.rot90(a), rtol=1e-9, atol=1e-12 * a.max())

    def test_quarter_turn_keeps_truncated_support(self):
        rng = np.random.default_rng(91)
        grid = GridSpec.centered(6.4, 6.4, 0.1)
        ii, jj = np.meshgrid(np.arange(grid.n_l), np.arange(grid.n_w), indexing="ij")
        px, py = grid.cell_to_world(ii, jj)
        for _ in range(50):
            s = random_state(rng, spread=1.0)
            turned = WaypointState(-s.y, s.x, s.l, s.w, s.theta + math.pi / 2)
            expected = np.rot90(rasterize_waypoint(s, grid).to_dense())
            actual = rasterize_waypoint(turned, grid).to_dense()
            # Cells may only flip when they sit on the truncation boundary
            m = mahalanobis_sq(np.stack([px - turned.x, py - turned.y], axis=-1), waypoint_covariance(turned))
            flipped = (expected > 0) != (actual > 0)
            assert np.all(np.abs(m[flipped] - 1.0) < 1e-9)
            both = (expected > 0) & (actual > 0)
            np.testing.assert_allclose(actual[both], expected[both], rtol=1e-9)

    def test_matches_independent_formula(self):
        rng = np.random.default_rng(5)
        grid = GridSpec.centered(6.4, 6.4, 0.1)
        ii, jj = np.meshgrid(np.arange(grid.n_l), np.arange(grid.n_w), indexing="ij")
        px, py = grid.cell_to_world(ii, jj)
        for _ in range(20):
            s = random_state(rng)
            expected = formula_density(s, px, py, truncation_md=None)
            np.testing.assert_allclose(
                rasterize_waypoint(s, grid, truncation_md=None).to_dense(), expected, rtol=1e-10, atol=1e-15
            )

    def test_truncated_mass(self):
        grid = GridSpec.centered(12.0, 6.0, 0.01)
        raster = rasterize_waypoint(WaypointState(0.0, 0.0, 4.0, 2.0, 0.3), grid, truncation_md=1.0)
        assert raster.mass() == pytest.approx(1.0 - math.exp(-0.5), abs=1e-3)

    def test_untruncated_mass(self):
        grid = GridSpec.centered(8.0, 4.0, 0.01)
        raster = rasterize_waypoint(WaypointState(0.0, 0.0, 1.0, 0.5, 0.0), grid, truncation_md=None)
        assert raster.mass() >= 0.999

    def test_waypoint_outside_grid_gives_empty_raster(self):
        grid = GridSpec.centered(10.0, 10.0, 0.1)
        raster = rasterize_waypoint(WaypointState(50.0, 50.0, 4.0, 2.0, 0.0), grid)
        assert raster.window.is_empty
        assert raster.total() == 0.0
        assert raster.to_dense().shape == grid.shape

    def test_fixed_sigma_is_isotropic(self):
        grid = GridSpec(11.0, 11.0, 1.0, 1.0, origin=(-5.5, -5.5))
        a = rasterize_waypoint(WaypointState(0.0, 0.0, 4.0, 2.0, 0.0), grid, fixed_sigma=1.5).to_dense()
        b = rasterize_waypoint(WaypointState(0.0, 0.0, 1.0, 3.0, 1.1), grid, fixed_sigma=1.5).to_dense()
        np.testing.assert_allclose(a, b, rtol=1e-12)
        assert a[5, 5] == pytest.approx(1.0 / (2 * math.pi * 1.5**2))

    @pytest.mark.parametrize("kwargs", [{"k": 0.0}, {"truncation_md": -1.0}, {"fixed_sigma": 0.0}])
    def test_invalid_parameters(self, kwargs):
        grid = GridSpec.centered(10.0, 10.0, 1.0)
        with pytest.raises(InvalidArgumentError):
            rasterize_waypoint(WaypointState(0.0, 0.0, 4.0, 2.0, 0.0), grid, **kwargs)


class TestRasterWindow:
    """Truncation bounding boxes."""

    def test_contains_every_nonzero_cell(self):
        grid = GridSpec(21.0, 21.0, 1.0, 1.0, origin=(-10.5, -10.5))
        s = WaypointState(0.0, 0.0, 4.0, 2.0, 0.0)
        window = raster_window(s, grid, truncation_md=1.0)
        nonzero = np.argwhere(full_grid_density(s, grid) > 0)
        assert np.all((nonzero[:, 0] >= window.i0) & (nonzero[:, 0] < window.i1))
        assert np.all((nonzero[:, 1] >= window.j0) & (nonzero[:, 1] < window.j1))
        # Half extents of at most ceil(2√2) and ceil(√2) cells around the center cell
        assert window.shape[0] <= 2 * 3 + 1
        assert window.shape[1] <= 2 * 2 + 1

    def test_contains_nonzero_cells_for_random_states(self):
        rng = np.random.default_rng(9)
        grid = GridSpec.centered(12.0, 12.0, 0.2)
        for _ in range(50):
            s = random_state(rng)
            window = raster_window(s, grid, truncation_md=1.0)
            outside = np.ones(grid.shape, dtype=bool)
            outside[window.slices] = False
            assert not np.any(full_grid_density(s, grid)[outside])

    def test_grows_with_truncation(self):
        grid = GridSpec.centered(40.0, 40.0, 0.5)
        s = WaypointState(1.0, -2.0, 4.0, 2.0, 0.6)
        small, medium, large = (raster_window(s, grid, truncation_md=md) for md in (0.5, 1.0, 2.0))
        assert medium.contains(small)
        assert large.contains(medium)

    def test_untruncated_window_is_whole_grid(self):
        grid = GridSpec.centered(10.0, 10.0, 1.0)
        assert raster_window(WaypointState(0, 0, 4, 2, 0), grid, truncation_md=None) == grid.full_window

    def test_actor_outside_grid(self):
        grid = GridSpec.centered(10.0, 10.0, 1.0)
        assert raster_window(WaypointState(-40.0, 0.0, 4.0, 2.0, 0.0), grid).is_empty


class TestGradients:
    """Backward pass against finite differences."""

    def test_zero_at_center(self):
        s = WaypointState(0.0, 0.0, 4.0, 2.0, 0.4)
        _, gx, gy, gt = evaluate_density_grad(s, 0.0, 0.0)
        assert (float(gx), float(gy), float(gt)) == (0.0, 0.0, 0.0)

    def test_circular_actor_has_no_heading_gradient(self):
        grid = GridSpec.centered(10.0, 10.0, 0.1)
        _, grad = rasterize_waypoint_grad(WaypointState(0.3, -0.2, 3.0, 3.0, 0.9), grid)
        assert np.all(grad.dtheta == 0.0)

    def test_fixed_sigma_has_no_heading_gradient(self):
        grid = GridSpec.centered(10.0, 10.0, 0.1)
        _, grad = rasterize_waypoint_grad(WaypointState(0.3, -0.2, 4.0, 2.0, 0.9), grid, fixed_sigma=1.0)
        assert np.all(grad.dtheta == 0.0)
        assert np.any(grad.dx != 0.0)

    def test_matches_central_differences(self):
        rng = np.random.default_rng(42)
        checked = 0
        while checked < 1000:
            s = random_state(rng)
            px, py = points_inside(rng, s, 10)
            _, gx, gy, gt = evaluate_density_grad(s, px, py, truncation_md=1.0)
            analytic = {"x": gx, "y": gy, "theta": gt}
            for name in ("x", "y", "theta"):
                plus = dict(x=s.x, y=s.y, theta=s.theta)
                minus = dict(plus)
                plus[name] += H
                minus[name] -= H
                f_plus = evaluate_density(s.with_pose(**plus), px, py, truncation_md=1.0)
                f_minus = evaluate_density(s.with_pose(**minus), px, py, truncation_md=1.0)
                numeric = (f_plus - f_minus) / (2 * H)
                np.testing.assert_allclose(analytic[name], numeric, rtol=1e-5, atol=1e-9)
            checked += len(px)

    def test_raster_grad_matches_pointwise_grad(self):
        grid = GridSpec.centered(10.0, 10.0, 0.1)
        s = WaypointState(0.4, 0.1, 4.0, 2.0, 0.5)
        raster, grad = rasterize_waypoint_grad(s, grid)
        px, py = grid.window_centers(raster.window)
        values, gx, gy, gt = evaluate_density_grad(s, px, py)
        np.testing.assert_array_equal(raster.values, values)
        np.testing.assert_array_equal(grad.dx, gx)
        np.testing.assert_array_equal(grad.dy, gy)
        np.testing.assert_array_equal(grad.dtheta, gt)


class TestEllipseTermGradient:
    """End-to-end gradient of the ungated ellipse term on half-plane scenes."""

    def test_matches_finite_differences(self):
        rng = np.random.default_rng(17)
        grid = GridSpec.centered(10.0, 10.0, 0.1)
        for _ in range(20):
            mask, _ = rotated_half_plane(grid, rng.uniform(0.0, 2 * math.pi))
            x, y = rng.uniform(-1.0, 1.0, size=2)
            l, w = rng.uniform(1.5, 4.0, size=2)  # noqa: E741
            s = WaypointState(x, y, l, w, rng.uniform(-math.pi, math.pi))
            _, grad = ellipse_term(s, mask, truncation_md=None)
            numeric = []
            for axis in range(3):
                step = np.zeros(3)
                step[axis] = H
                pose = np.array([s.x, s.y, s.theta])
                f_plus, _ = ellipse_term(s.with_pose(*(pose + step)), mask, truncation_md=None)
                f_minus, _ = ellipse_term(s.with_pose(*(pose - step)), mask, truncation_md=None)
                numeric.append((f_plus - f_minus) / (2 * H))
            np.testing.assert_allclose(grad, numeric, rtol=1e-4, atol=1e-6 * np.linalg.norm(numeric))


class TestEllipseLossGradient:
    """Gradient of the gated, truncated loss over a two-actor scene."""

    @staticmethod
    def support(s, grid):
        return rasterize_waypoint(s, grid, truncation_md=1.0).to_dense() > 0

    def test_matches_finite_differences(self):
        rng = np.random.default_rng(31)
        grid = GridSpec.centered(10.0, 10.0, 0.1)
        checked = 0
        for _ in range(20):
            mask, normal = rotated_half_plane(grid, rng.uniform(0.0, 2 * math.pi))
            l, w = rng.uniform(1.5, 2.5, size=2)  # noqa: E741
            theta = rng.uniform(-math.pi, math.pi)
            x, y = rng.uniform(-1.0, 1.0, size=2)
            # First ground truth sits on the drivable side, the second on the other side
            gts = [
                Trajectory.from_poses([(*(-2.5 * normal), theta)], l, w),
                Trajectory.from_poses([(*(2.5 * normal), theta)], l, w),
            ]
            preds = [Trajectory.from_poses([(x, y, theta)], l, w), Trajectory.from_poses([(y, x, theta)], l, w)]
            result = ellipse_loss(preds, gts, mask, truncation_md=1.0)
            assert result.indicators.tolist() == [[1], [0]]
            assert result.contributions[1, 0] == 0.0
            assert np.all(result.gradients[1] == 0.0)

            s, pose = preds[0][0], np.array([x, y, theta])
            for axis in range(3):
                step = np.zeros(3)
                step[axis] = H
                plus, minus = s.with_pose(*(pose + step)), s.with_pose(*(pose - step))
                if not np.array_equal(self.support(plus, grid), self.support(minus, grid)):
                    continue
                f_plus = ellipse_loss([Trajectory((plus,)), preds[1]], gts, mask, truncation_md=1.0).total
                f_minus = ellipse_loss([Trajectory((minus,)), preds[1]], gts, mask, truncation_md=1.0).total
                numeric = (f_plus - f_minus) / (2 * H)
                assert result.gradients[0, 0, axis] == pytest.approx(numeric, rel=1e-4, abs=1e-6)
                checked += 1
        assert checked >= 50

class TestRadialProfile:
    """Where the gradient magnitude peaks."""

    @pytest.mark.parametrize("angle", [0.0, 0.5, math.pi / 2, 2.0])
    def test_peak_at_unit_mahalanobis_radius(self, angle):
        s = WaypointState(0.0, 0.0, 4.0, 2.0, 0.3)
        assert peak_gradient_md(s, angle=angle) == pytest.approx(1.0, abs=0.02)

    def test_peak_with_other_scale(self):
        s = WaypointState(2.0, -1.0, 5.0, 1.5, -0.7)
        assert peak_gradient_md(s, k=1.2, angle=1.0) == pytest.approx(1.0, abs=0.02)

    def test_profile_shape(self):
        radii, magnitudes = radial_gradient_profile(WaypointState(0, 0, 4, 2, 0), samples=101)
        assert radii.shape == magnitudes.shape == (101,)
        assert magnitudes[0] == 0.0

    def test_invalid_profile(self):
        with pytest.raises(InvalidArgumentError):
            radial_gradient_profile(WaypointState(0, 0, 4, 2, 0), samples=1)
