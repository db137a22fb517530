"""Gradient descent of one actor's pose under the ellipse loss, plus the half-plane toy scene."""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from dataclasses import field
from enum import Enum
from typing import Any
from typing import Dict
from typing import List
from typing import Optional
from typing import Sequence
from typing import Tuple

import numpy as np
from pydantic import BaseModel
from pydantic import ConfigDict
from pydantic import Field

from ..exceptions import BoundaryExitError
from ..exceptions import create_error_with_context
from .bdtr import DEFAULT_TRUNCATION_MD
from .bdtr import unclipped_window
from .geometry import DEFAULT_K
from .geometry import GridSpec
from .geometry import WaypointState
from .losses import ellipse_term
from .map_raster import DrivableMask
from .map_raster import Polygon
from .map_raster import PolygonSet
from .map_raster import rasterize_drivable


logger = logging.getLogger(__name__)

TRUNCATION_VARIANTS: Tuple[Optional[float], ...] = (0.5, 1.0, 2.0, None)
REFERENCE_TRUNCATION = 1.0


class OptimizerConfig(BaseModel):
    """Fixed-step gradient descent settings for ``run_toy``."""

    model_config = ConfigDict(frozen=True)

    iterations: int = Field(default=1000, ge=1, description="Number of gradient steps")
    step_size_xy: float = Field(default=0.05, gt=0, description="Meters moved per unit gradient")
    step_size_theta: float = Field(default=0.01, gt=0, description="Radians turned per unit gradient")
    truncation_md: Optional[float] = Field(
        default=DEFAULT_TRUNCATION_MD, gt=0, description="Truncation radius in Mahalanobis units, None for none"
    )
    k: float = Field(default=DEFAULT_K, gt=0, description="Box-to-sigma scale factor")
    fixed_sigma: Optional[float] = Field(default=None, gt=0, description="Isotropic sigma in meters")


class TraceStatus(str, Enum):
    COMPLETED = "completed"
    BOUNDARY_EXIT = "boundary_exit"


@dataclass(frozen=True)
class TraceRow:
    iteration: int
    state: WaypointState
    loss: float
    grad_norm: float

    def to_csv_row(self) -> Dict[str, Any]:
        return {
            "iter": self.iteration,
            "x": self.state.x,
            "y": self.state.y,
            "theta": self.state.theta,
            "loss": self.loss,
            "grad_norm": self.grad_norm,
        }


@dataclass
class OptTrace:
    """States visited by ``run_toy``, the initial state included."""

    config: OptimizerConfig
    rows: List[TraceRow] = field(default_factory=list)
    status: TraceStatus = TraceStatus.COMPLETED

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def initial(self) -> TraceRow:
        return self.rows[0]

    @property
    def final(self) -> TraceRow:
        return self.rows[-1]

    def states(self) -> List[WaypointState]:
        return [row.state for row in self.rows]

    def losses(self) -> np.ndarray:
        return np.array([row.loss for row in self.rows])


def _left_grid(s: WaypointState, mask: DrivableMask, cfg: OptimizerConfig) -> bool:
    grid = mask.grid
    if cfg.truncation_md is None:
        return grid.world_to_cell(s.x, s.y) is None
    return not grid.full_window.contains(unclipped_window(s, grid, cfg.k, cfg.truncation_md, cfg.fixed_sigma))


def run_toy(
    initial: WaypointState, mask: DrivableMask, cfg: Optional[OptimizerConfig] = None, fail_on_exit: bool = False
) -> OptTrace:
    """Descend ``(x, y, θ)`` on the ungated ellipse loss; ``l`` and ``w`` never change.

    The run stops early with ``boundary_exit`` when the actor's truncation window (or, untruncated,
    its center) would leave the grid; the offending state is not recorded. With ``fail_on_exit``
    a ``BoundaryExitError`` is raised instead.
    """
    cfg = cfg or OptimizerConfig()
    trace = OptTrace(config=cfg)
    state = initial
    loss, grad = ellipse_term(state, mask, cfg.k, cfg.truncation_md, cfg.fixed_sigma)
    trace.rows.append(TraceRow(0, state, loss, float(np.linalg.norm(grad))))

    for iteration in range(1, cfg.iterations + 1):
        candidate = state.with_pose(
            state.x - cfg.step_size_xy * grad[0],
            state.y - cfg.step_size_xy * grad[1],
            state.theta - cfg.step_size_theta * grad[2],
        )
        if _left_grid(candidate, mask, cfg):
            if fail_on_exit:
                raise create_error_with_context(
                    BoundaryExitError,
                    f"Actor left the grid at iteration {iteration}",
                    iteration=iteration,
                    state={"x": candidate.x, "y": candidate.y, "theta": candidate.theta},
                )
            trace.status = TraceStatus.BOUNDARY_EXIT
            logger.debug("Actor left the grid at iteration %d", iteration)
            break
        state = candidate
        loss, grad = ellipse_term(state, mask, cfg.k, cfg.truncation_md, cfg.fixed_sigma)
        trace.rows.append(TraceRow(iteration, state, loss, float(np.linalg.norm(grad))))

    logger.debug(
        "Toy run (truncation=%s): %d rows, loss %.3g -> %.3g, status %s",
        cfg.truncation_md,
        len(trace),
        trace.initial.loss,
        trace.final.loss,
        trace.status.value,
    )
    return trace


@dataclass(frozen=True)
class ToyScene:
    """Grid split by the vertical line ``x = boundary_x``; only ``x < boundary_x`` is drivable."""

    mask: DrivableMask
    initial: WaypointState
    polygons: PolygonSet
    boundary_x: float = 0.0

    @property
    def grid(self) -> GridSpec:
        return self.mask.grid


def build_toy_scene(
    size_m: float = 20.0,
    cell: float = 0.1,
    boundary_x: float = 0.0,
    actor_length: float = 4.0,
    actor_width: float = 2.0,
    center: Tuple[float, float] = (-0.5, 0.0),
    tilt: float = math.pi / 6,
) -> ToyScene:
    """Centered square grid with a non-drivable half-plane and an actor tilted into it by ``tilt``."""
    grid = GridSpec.centered(size_m, size_m, cell)
    x_min, y_min = grid.origin
    drivable = PolygonSet((Polygon.rectangle(x_min, y_min, boundary_x, y_min + size_m),))
    mask = rasterize_drivable(drivable, grid)
    initial = WaypointState(center[0], center[1], actor_length, actor_width, math.pi / 2 + tilt)
    return ToyScene(mask, initial, drivable, boundary_x)


def orientation_residual(theta: float, boundary_angle: float = math.pi / 2) -> float:
    """Angle between the box's long axis and the boundary direction, in ``[0, π/2]``."""
    r = math.fmod(theta - boundary_angle, math.pi)
    r = abs(r)
    return min(r, math.pi - r)


def distance_to_boundary(s: WaypointState, boundary_x: float = 0.0) -> float:
    """Signed distance from the center to the boundary, positive on the drivable side."""
    return boundary_x - s.x


def format_truncation(truncation_md: Optional[float]) -> str:
    return "none" if truncation_md is None else f"{truncation_md:g}md"


@dataclass(frozen=True)
class SweepEntry:
    truncation_md: Optional[float]
    trace: OptTrace
    final_distance: float
    final_loss: float
    orientation_residual: float
    relative_distance_delta: Optional[float] = None

    @property
    def label(self) -> str:
        return format_truncation(self.truncation_md)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "variant": self.label,
            "truncation_md": self.truncation_md,
            "status": self.trace.status.value,
            "iterations_run": len(self.trace) - 1,
            "final_distance": self.final_distance,
            "final_loss": self.final_loss,
            "orientation_residual": self.orientation_residual,
            "relative_distance_delta": self.relative_distance_delta,
        }


def run_truncation_sweep(
    initial: WaypointState,
    mask: DrivableMask,
    cfg: Optional[OptimizerConfig] = None,
    variants: Sequence[Optional[float]] = TRUNCATION_VARIANTS,
    boundary_x: float = 0.0,
    max_workers: int = 4,
) -> List[SweepEntry]:
    """Run the toy once per truncation setting and compare final distances against the 1 Md run."""
    cfg = cfg or OptimizerConfig()
    configs = [cfg.model_copy(update={"truncation_md": md}) for md in variants]
    with ThreadPoolExecutor(max_workers=max(1, max_workers)) as pool:
        traces = list(pool.map(lambda c: run_toy(initial, mask, c), configs))

    distances = {md: distance_to_boundary(trace.final.state, boundary_x) for md, trace in zip(variants, traces)}
    reference = distances.get(REFERENCE_TRUNCATION)
    entries = []
    for md, trace in zip(variants, traces):
        delta = None
        if reference:
            delta = (distances[md] - reference) / reference
        entries.append(
            SweepEntry(
                truncation_md=md,
                trace=trace,
                final_distance=distances[md],
                final_loss=trace.final.loss,
                orientation_residual=orientation_residual(trace.final.state.theta),
                relative_distance_delta=delta,
            )
        )
    return entries
