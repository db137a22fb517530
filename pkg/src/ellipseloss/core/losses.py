"""Trajectory losses: smooth-L1 regression, the ellipse scene-compliance term and their mix."""

import logging
import math
from dataclasses import dataclass
from typing import Any
from typing import Dict
from typing import Optional
from typing import Sequence
from typing import Tuple

import numpy as np

from ..exceptions import GridMismatchError
from ..exceptions import InvalidArgumentError
from .bdtr import DEFAULT_TRUNCATION_MD
from .bdtr import rasterize_waypoint_grad
from .geometry import DEFAULT_K
from .geometry import GridSpec
from .geometry import Trajectory
from .geometry import WaypointState
from .geometry import box_corners
from .geometry import check_alignment
from .map_raster import DrivableMask
from .map_raster import drivable_at
from .metrics import OffroadPolicy
from .metrics import orfp_flags


logger = logging.getLogger(__name__)

DEFAULT_LAMBDA = 0.03
DEFAULT_BETA = 1.0
DEFAULT_OFFROAD_FACTOR = 5.0

VANILLA_TERMS = ("x", "y", "l", "w", "sin_theta", "cos_theta")


def smooth_l1(r, beta: float = DEFAULT_BETA):
    """Smooth-L1: ``0.5·r²/β`` inside ``|r| < β``, ``|r| − 0.5·β`` outside."""
    if not beta > 0:
        raise InvalidArgumentError(f"Smooth-L1 beta must be positive, got {beta}")
    r = np.asarray(r, dtype=float)
    abs_r = np.abs(r)
    value = np.where(abs_r < beta, 0.5 * r * r / beta, abs_r - 0.5 * beta)
    if value.ndim == 0:
        return float(value)
    return value


def vanilla_terms(pred: Trajectory, gt: Trajectory, beta: float = DEFAULT_BETA) -> np.ndarray:
    """Per-waypoint smooth-L1 terms, shaped ``(T, 6)`` in ``VANILLA_TERMS`` order."""
    p, g = pred.as_array(), gt.as_array()
    residuals = np.column_stack(
        [
            p[:, 0] - g[:, 0],
            p[:, 1] - g[:, 1],
            p[:, 2] - g[:, 2],
            p[:, 3] - g[:, 3],
            np.sin(p[:, 4]) - np.sin(g[:, 4]),
            np.cos(p[:, 4]) - np.cos(g[:, 4]),
        ]
    )
    return smooth_l1(residuals, beta)


def vanilla_loss(preds: Sequence[Trajectory], gts: Sequence[Trajectory], beta: float = DEFAULT_BETA) -> float:
    """Sum over actors and steps of the six smooth-L1 regression terms."""
    check_alignment(preds, gts)
    return math.fsum(float(term) for pred, gt in zip(preds, gts) for term in vanilla_terms(pred, gt, beta).ravel())


def indicator_in_drivable(gt_waypoint: WaypointState, mask: DrivableMask) -> int:
    """1 when the ground-truth center and all four corners sit in drivable cells, else 0."""
    points = np.vstack([box_corners(gt_waypoint), gt_waypoint.center[None, :]])
    _, drivable = drivable_at(mask, points)
    return int(np.all(drivable))


def ellipse_term(
    s: WaypointState,
    mask: DrivableMask,
    k: float = DEFAULT_K,
    truncation_md: Optional[float] = DEFAULT_TRUNCATION_MD,
    fixed_sigma: Optional[float] = None,
) -> Tuple[float, np.ndarray]:
    """Ungated ellipse loss of one predicted waypoint and its ``(x, y, θ)`` gradient."""
    raster, grad = rasterize_waypoint_grad(s, mask.grid, k, truncation_md, fixed_sigma)
    if raster.window.is_empty:
        return 0.0, np.zeros(3)
    weights = mask.non_drivable(raster.window)
    return float(np.sum(raster.values * weights)), grad.weighted_sum(weights)


@dataclass(frozen=True)
class EllipseLossResult:
    """Gated ellipse loss with per-(actor, step) detail."""

    total: float
    contributions: np.ndarray
    gradients: np.ndarray
    indicators: np.ndarray


def ellipse_loss(
    preds: Sequence[Trajectory],
    gts: Sequence[Trajectory],
    mask: DrivableMask,
    k: float = DEFAULT_K,
    truncation_md: Optional[float] = DEFAULT_TRUNCATION_MD,
    fixed_sigma: Optional[float] = None,
    grid: Optional[GridSpec] = None,
) -> EllipseLossResult:
    """Sum of ``G(s) ∘ (1 − D)`` over cells for every step whose ground-truth box is drivable."""
    if grid is not None and grid != mask.grid:
        raise GridMismatchError(f"Mask grid {mask.grid} does not match rasterization grid {grid}")
    n_actors, horizon = check_alignment(preds, gts)
    contributions = np.zeros((n_actors, horizon))
    gradients = np.zeros((n_actors, horizon, 3))
    indicators = np.zeros((n_actors, horizon), dtype=np.uint8)
    for a, (pred, gt) in enumerate(zip(preds, gts)):
        for t, (s, s_gt) in enumerate(zip(pred, gt)):
            indicators[a, t] = indicator_in_drivable(s_gt, mask)
            if not indicators[a, t]:
                continue
            contributions[a, t], gradients[a, t] = ellipse_term(s, mask, k, truncation_md, fixed_sigma)
    total = math.fsum(contributions.ravel().tolist())
    logger.debug("Ellipse loss %.6g over %d gated waypoints", total, int(indicators.sum()))
    return EllipseLossResult(total, contributions, gradients, indicators)


def combine_terms(vanilla: float, ellipse: float, lambda_: float = DEFAULT_LAMBDA) -> float:
    """``vanilla + λ·ellipse``."""
    if not lambda_ >= 0:
        raise InvalidArgumentError(f"Lambda must be non-negative, got {lambda_}")
    return vanilla + lambda_ * ellipse


@dataclass(frozen=True)
class LossReport:
    """Vanilla, ellipse and combined losses with per-waypoint ellipse detail."""

    vanilla: float
    ellipse: float
    total: float
    lambda_: float
    contributions: np.ndarray
    gradients: np.ndarray
    indicators: np.ndarray
    offroad_reweighted: Optional[float] = None

    @property
    def n_waypoints(self) -> int:
        return int(self.contributions.size)

    @property
    def vanilla_mean(self) -> float:
        return self.vanilla / self.n_waypoints

    @property
    def ellipse_mean(self) -> float:
        return self.ellipse / self.n_waypoints

    def to_dict(self) -> Dict[str, Any]:
        return {
            "vanilla": self.vanilla,
            "ellipse": self.ellipse,
            "total": self.total,
            "lambda": self.lambda_,
            "offroad_reweighted": self.offroad_reweighted,
            "n_waypoints": self.n_waypoints,
            "vanilla_mean": self.vanilla_mean,
            "ellipse_mean": self.ellipse_mean,
            "per_actor_per_step": self.contributions.tolist(),
            "gradients": self.gradients.tolist(),
            "indicators": self.indicators.tolist(),
        }


def combined_loss(
    preds: Sequence[Trajectory],
    gts: Sequence[Trajectory],
    mask: DrivableMask,
    lambda_: float = DEFAULT_LAMBDA,
    k: float = DEFAULT_K,
    truncation_md: Optional[float] = DEFAULT_TRUNCATION_MD,
    beta: float = DEFAULT_BETA,
    fixed_sigma: Optional[float] = None,
    grid: Optional[GridSpec] = None,
    offroad_factor: Optional[float] = None,
) -> LossReport:
    """``L_vanilla + λ·L_ellipse``; with ``offroad_factor`` the reweighted baseline is reported too."""
    if not lambda_ >= 0:
        raise InvalidArgumentError(f"Lambda must be non-negative, got {lambda_}")
    vanilla = vanilla_loss(preds, gts, beta)
    ellipse = ellipse_loss(preds, gts, mask, k, truncation_md, fixed_sigma, grid)
    reweighted = None
    if offroad_factor is not None:
        reweighted = offroad_reweighted_loss(preds, gts, mask, offroad_factor, beta)
    return LossReport(
        vanilla=vanilla,
        ellipse=ellipse.total,
        total=combine_terms(vanilla, ellipse.total, lambda_),
        lambda_=lambda_,
        contributions=ellipse.contributions,
        gradients=ellipse.gradients,
        indicators=ellipse.indicators,
        offroad_reweighted=reweighted,
    )


def offroad_reweighted_loss(
    preds: Sequence[Trajectory],
    gts: Sequence[Trajectory],
    mask: DrivableMask,
    factor: float = DEFAULT_OFFROAD_FACTOR,
    beta: float = DEFAULT_BETA,
) -> float:
    """Vanilla loss with the x and y terms of center-policy ORFP waypoints scaled by ``factor``."""
    if not factor >= 1:
        raise InvalidArgumentError(f"Off-road factor must be at least 1, got {factor}")
    check_alignment(preds, gts)
    terms = []
    for pred, gt in zip(preds, gts):
        per_step = vanilla_terms(pred, gt, beta)
        flags = orfp_flags(pred, gt, mask, OffroadPolicy.CENTER)
        per_step[flags, :2] *= factor
        terms.extend(per_step.ravel().tolist())
    return math.fsum(terms)
