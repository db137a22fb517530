"""Trajectory evaluation: l2 displacement errors and off-road false-positive ratios."""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Any
from typing import Dict
from typing import List
from typing import Sequence

import numpy as np

from .geometry import Trajectory
from .geometry import WaypointState
from .geometry import box_corners
from .geometry import check_alignment
from .map_raster import DrivableMask
from .map_raster import drivable_at
from .map_raster import is_drivable_point


logger = logging.getLogger(__name__)


class OffroadStatus(str, Enum):
    OFFROAD = "offroad"
    INROAD = "inroad"
    OUT_OF_RANGE = "out_of_range"


class OffroadPolicy(str, Enum):
    """Which points of the box decide off-roadness."""

    CENTER = "center"
    BOX = "box"


def is_offroad_center(s: WaypointState, mask: DrivableMask) -> OffroadStatus:
    drivable = is_drivable_point(mask, (s.x, s.y))
    if drivable is None:
        return OffroadStatus.OUT_OF_RANGE
    return OffroadStatus.INROAD if drivable else OffroadStatus.OFFROAD


def is_offroad_box(s: WaypointState, mask: DrivableMask) -> OffroadStatus:
    """Corner policy: any in-range non-drivable corner wins over corners that left the grid."""
    in_range, drivable = drivable_at(mask, box_corners(s))
    if np.any(in_range & ~drivable):
        return OffroadStatus.OFFROAD
    if not np.all(in_range):
        return OffroadStatus.OUT_OF_RANGE
    return OffroadStatus.INROAD


def offroad_status(s: WaypointState, mask: DrivableMask, policy: OffroadPolicy) -> OffroadStatus:
    if OffroadPolicy(policy) is OffroadPolicy.BOX:
        return is_offroad_box(s, mask)
    return is_offroad_center(s, mask)


def orfp_flags(pred: Trajectory, gt: Trajectory, mask: DrivableMask, policy: OffroadPolicy) -> np.ndarray:
    """Per-step ORFP booleans of one actor.

    A step is ORFP when the prediction is off-road and the ground truth in-road. When either
    leaves the grid the previous step's flag carries over; the first step starts from False.
    """
    flags = np.zeros(len(pred), dtype=bool)
    previous = False
    for t, (s, s_gt) in enumerate(zip(pred, gt)):
        predicted = offroad_status(s, mask, policy)
        truth = offroad_status(s_gt, mask, policy)
        if OffroadStatus.OUT_OF_RANGE in (predicted, truth):
            flags[t] = previous
        else:
            flags[t] = predicted is OffroadStatus.OFFROAD and truth is OffroadStatus.INROAD
        previous = bool(flags[t])
    return flags


@dataclass(frozen=True)
class HorizonSeries:
    """A metric per horizon with its mean over horizons and its last value."""

    per_horizon: np.ndarray

    @property
    def average(self) -> float:
        return math.fsum(self.per_horizon.tolist()) / len(self.per_horizon)

    @property
    def at_final(self) -> float:
        return float(self.per_horizon[-1])


@dataclass(frozen=True)
class OrfpResult(HorizonSeries):
    flags: np.ndarray = None
    policy: OffroadPolicy = OffroadPolicy.CENTER


def orfp_ratio(
    preds: Sequence[Trajectory], gts: Sequence[Trajectory], mask: DrivableMask, policy: OffroadPolicy
) -> OrfpResult:
    """ORFP count over predictions at every horizon, and the mean over horizons."""
    n_actors, _ = check_alignment(preds, gts)
    flags = np.array([orfp_flags(pred, gt, mask, policy) for pred, gt in zip(preds, gts)])
    per_horizon = flags.sum(axis=0) / n_actors
    return OrfpResult(per_horizon=per_horizon, flags=flags, policy=OffroadPolicy(policy))


def l2_errors(preds: Sequence[Trajectory], gts: Sequence[Trajectory]) -> HorizonSeries:
    """Center displacement per horizon, averaged over actors."""
    check_alignment(preds, gts)
    displacement = np.array(
        [np.hypot(*(pred.as_array()[:, :2] - gt.as_array()[:, :2]).T) for pred, gt in zip(preds, gts)]
    )
    return HorizonSeries(per_horizon=displacement.mean(axis=0))


def horizon_labels(horizon: int, timestep: float) -> List[str]:
    return [f"@{(t + 1) * timestep:.1f}s" for t in range(horizon)]


@dataclass(frozen=True)
class MetricsReport:
    l2: HorizonSeries
    ctr_orfp: OrfpResult
    box_orfp: OrfpResult
    n_actors: int
    timestep: float

    @property
    def horizon(self) -> int:
        return len(self.l2.per_horizon)

    @property
    def counts(self) -> List[int]:
        return [self.n_actors] * self.horizon

    def to_dict(self) -> Dict[str, Any]:
        labels = horizon_labels(self.horizon, self.timestep)
        final = labels[-1]
        return {
            "l2_avg": self.l2.average,
            "l2_at_final": self.l2.at_final,
            "ctr_orfp_avg": self.ctr_orfp.average,
            "ctr_orfp_at_final": self.ctr_orfp.at_final,
            "box_orfp_avg": self.box_orfp.average,
            "box_orfp_at_final": self.box_orfp.at_final,
            "final_horizon": final,
            "horizons": labels,
            "counts": self.counts,
            "per_horizon": {
                "l2": self.l2.per_horizon.tolist(),
                "ctr_orfp": self.ctr_orfp.per_horizon.tolist(),
                "box_orfp": self.box_orfp.per_horizon.tolist(),
            },
        }


def evaluate_metrics(
    preds: Sequence[Trajectory], gts: Sequence[Trajectory], mask: DrivableMask, timestep: float = 0.1
) -> MetricsReport:
    n_actors, horizon = check_alignment(preds, gts)
    report = MetricsReport(
        l2=l2_errors(preds, gts),
        ctr_orfp=orfp_ratio(preds, gts, mask, OffroadPolicy.CENTER),
        box_orfp=orfp_ratio(preds, gts, mask, OffroadPolicy.BOX),
        n_actors=n_actors,
        timestep=timestep,
    )
    logger.debug("Evaluated %d actors over %d horizons", n_actors, horizon)
    return report
