"""Scenario documents: grid, drivable polygons and matched actor trajectories in one JSON file."""

import json
import logging
import math
from pathlib import Path
from typing import Any
from typing import Dict
from typing import List
from typing import Optional
from typing import Tuple
from typing import Union

import pydantic
from pydantic import BaseModel
from pydantic import ConfigDict
from pydantic import Field
from pydantic import field_validator

from ..exceptions import AlignmentError
from ..exceptions import InvalidArgumentError
from ..exceptions import OutputError
from ..exceptions import ScenarioParseError
from ..exceptions import ScenarioValidationError
from ..exceptions import SchemaVersionError
from ..exceptions import create_error_with_context
from .geometry import GridSpec
from .geometry import Trajectory
from .map_raster import DrivableMask
from .map_raster import Polygon
from .map_raster import PolygonSet
from .map_raster import rasterize_drivable
from .toy_optimizer import ToyScene


logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1

Point = Tuple[float, float]


class _StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid", allow_inf_nan=False, populate_by_name=True)


class GridModel(_StrictModel):
    length_m: float = Field(gt=0)
    width_m: float = Field(gt=0)
    cell_l: float = Field(gt=0)
    cell_w: float = Field(gt=0)
    origin: Point = (0.0, 0.0)

    def to_spec(self) -> GridSpec:
        return GridSpec(self.length_m, self.width_m, self.cell_l, self.cell_w, self.origin)


class PolygonModel(_StrictModel):
    exterior: List[Point] = Field(min_length=3)
    holes: List[List[Point]] = Field(default_factory=list)


class TrajectoryModel(_StrictModel):
    length: float = Field(gt=0)
    width: float = Field(gt=0)
    waypoints: List[Tuple[float, float, float]] = Field(min_length=1, description="(x, y, theta) rows")


class ActorModel(_StrictModel):
    id: str = Field(min_length=1)
    predicted: TrajectoryModel
    ground_truth: TrajectoryModel


class ScenarioConfig(_StrictModel):
    """Per-scenario overrides; unset fields fall back to the effective settings."""

    k: Optional[float] = Field(default=None, gt=0)
    lambda_: Optional[float] = Field(default=None, ge=0, alias="lambda")
    truncation_md: Optional[Union[float, str]] = None
    beta: Optional[float] = Field(default=None, gt=0)

    @field_validator("truncation_md")
    @classmethod
    def _truncation(cls, value):
        if isinstance(value, str):
            if value.strip().lower() != "none":
                raise ValueError("truncation_md must be a positive number or 'none'")
            return "none"
        if value is not None and not value > 0:
            raise ValueError("truncation_md must be positive")
        return value

    def overrides(self) -> Dict[str, Any]:
        """Fields given a value in the document, keyed by their JSON names."""
        return self.model_dump(by_alias=True, exclude_none=True)


class ScenarioDoc(_StrictModel):
    schema_version: int
    grid: GridModel
    timestep: float = Field(default=0.1, gt=0)
    drivable: List[PolygonModel] = Field(default_factory=list)
    actors: List[ActorModel] = Field(min_length=1)
    config: ScenarioConfig = Field(default_factory=ScenarioConfig)

    def grid_spec(self) -> GridSpec:
        return self.grid.to_spec()

    def polygon_set(self) -> PolygonSet:
        return PolygonSet(tuple(Polygon.from_points(p.exterior, p.holes) for p in self.drivable))

    def mask(self) -> DrivableMask:
        return rasterize_drivable(self.polygon_set(), self.grid_spec())

    @property
    def actor_ids(self) -> List[str]:
        return [actor.id for actor in self.actors]

    @property
    def horizon(self) -> int:
        return len(self.actors[0].predicted.waypoints)

    def trajectories(self) -> Tuple[List[Trajectory], List[Trajectory]]:
        """Predicted and ground-truth trajectories in actor order."""
        preds, gts = [], []
        for actor in self.actors:
            for model, bucket in ((actor.predicted, preds), (actor.ground_truth, gts)):
                bucket.append(Trajectory.from_poses(model.waypoints, model.length, model.width, self.timestep))
        return preds, gts


def _raw_actor_id(raw: Dict[str, Any], index: int) -> Optional[str]:
    try:
        return str(raw["actors"][index]["id"])
    except (KeyError, IndexError, TypeError):
        return None


def _from_pydantic(error: pydantic.ValidationError, raw: Dict[str, Any]) -> ScenarioValidationError:
    first = error.errors()[0]
    loc = list(first["loc"])
    actor_id = None
    if len(loc) >= 2 and loc[0] == "actors" and isinstance(loc[1], int):
        actor_id = _raw_actor_id(raw, loc[1])
        loc = loc[2:]
    field = ".".join(str(part) for part in loc) or None
    where = f"actor '{actor_id}' " if actor_id is not None else ""
    return ScenarioValidationError(f"Invalid scenario: {where}field '{field}': {first['msg']}", actor_id, field)


def check_invariants(doc: ScenarioDoc) -> ScenarioDoc:
    """Cross-field checks the schema cannot express."""
    try:
        doc.grid_spec()
    except InvalidArgumentError as e:
        raise ScenarioValidationError(str(e), field="grid") from e

    seen = set()
    for actor in doc.actors:
        if actor.id in seen:
            raise ScenarioValidationError(f"Duplicate actor id '{actor.id}'", actor.id, "id")
        seen.add(actor.id)

    horizon = doc.horizon
    for actor in doc.actors:
        for name in ("predicted", "ground_truth"):
            steps = len(getattr(actor, name).waypoints)
            if steps != horizon:
                raise create_error_with_context(
                    AlignmentError,
                    f"Actor '{actor.id}': {name} has {steps} waypoints, expected {horizon}",
                    actor=actor.id,
                    field=name,
                )

    doc.polygon_set().validate()
    return doc


def parse_scenario(raw: Dict[str, Any]) -> ScenarioDoc:
    if not isinstance(raw, dict):
        raise ScenarioParseError("A scenario document must be a JSON object")
    if "schema_version" not in raw:
        raise SchemaVersionError(f"Missing schema_version; expected {SCHEMA_VERSION}")
    version = raw["schema_version"]
    if version != SCHEMA_VERSION:
        raise SchemaVersionError(f"Unsupported schema_version {version!r}; expected {SCHEMA_VERSION}")
    try:
        doc = ScenarioDoc.model_validate(raw)
    except pydantic.ValidationError as e:
        raise _from_pydantic(e, raw) from e
    return check_invariants(doc)


def load_scenario(path: Union[str, Path]) -> ScenarioDoc:
    """Read and fully validate a scenario file."""
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as f:
            raw = json.load(f)
    except FileNotFoundError as e:
        raise ScenarioParseError(f"Scenario file not found: {path}") from e
    except json.JSONDecodeError as e:
        raise ScenarioParseError(f"Scenario file {path} is not valid JSON: {e}") from e
    doc = parse_scenario(raw)
    logger.debug("Loaded scenario %s: %d actors, horizon %d", path, len(doc.actors), doc.horizon)
    return doc


def write_scenario(doc: ScenarioDoc, path: Union[str, Path]) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as f:
            json.dump(doc.model_dump(mode="json", by_alias=True), f, indent=2)
    except OSError as e:
        raise OutputError(f"Failed to write scenario {path}: {e}") from e
    return path


def scenario_from_toy(scene: ToyScene) -> ScenarioDoc:
    """One-step scenario of the toy actor against a ground truth parked parallel to the boundary."""
    grid = scene.grid
    s = scene.initial
    gt_pose = (scene.boundary_x - s.w, s.y, math.pi / 2)
    return ScenarioDoc(
        schema_version=SCHEMA_VERSION,
        grid=GridModel(
            length_m=grid.length_m, width_m=grid.width_m, cell_l=grid.cell_l, cell_w=grid.cell_w, origin=grid.origin
        ),
        drivable=[
            PolygonModel(exterior=poly.exterior.tolist(), holes=[hole.tolist() for hole in poly.holes])
            for poly in scene.polygons.polygons
        ],
        actors=[
            ActorModel(
                id="toy",
                predicted=TrajectoryModel(length=s.l, width=s.w, waypoints=[(s.x, s.y, s.theta)]),
                ground_truth=TrajectoryModel(length=s.l, width=s.w, waypoints=[gt_pose]),
            )
        ],
    )
