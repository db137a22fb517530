"""Configuration settings for ellipseloss."""

import json
import math
from pathlib import Path
from typing import Any
from typing import Dict
from typing import Optional
from typing import Tuple

from pydantic import BaseModel
from pydantic import ConfigDict
from pydantic import Field

from ..core.geometry import DEFAULT_K
from ..core.geometry import GridSpec
from ..core.toy_optimizer import OptimizerConfig
from ..core.toy_optimizer import ToyScene
from ..core.toy_optimizer import build_toy_scene


class RasterSettings(BaseModel):
    """Gaussian raster configuration."""

    k: float = Field(default=DEFAULT_K, gt=0, description="Box-to-sigma scale factor")
    truncation_md: Optional[float] = Field(
        default=1.0, gt=0, description="Truncation radius in Mahalanobis units (null disables truncation)"
    )
    fixed_sigma: Optional[float] = Field(
        default=None, gt=0, description="Isotropic sigma in meters, ignoring the box size"
    )


class LossSettings(BaseModel):
    """Loss weighting configuration."""

    model_config = ConfigDict(populate_by_name=True)

    lambda_: float = Field(default=0.03, ge=0, alias="lambda", description="Ellipse loss weight")
    beta: float = Field(default=1.0, gt=0, description="Smooth-L1 transition point")
    offroad_factor: float = Field(default=5.0, ge=1, description="Off-road baseline upweighting factor")


class OptimizerSettings(BaseModel):
    """Toy gradient descent configuration."""

    iterations: int = Field(default=1000, ge=1, description="Gradient steps per run")
    step_size_xy: float = Field(default=0.05, gt=0, description="Position step per unit gradient")
    step_size_theta: float = Field(default=0.01, gt=0, description="Heading step per unit gradient")


class GridSettings(BaseModel):
    """Scene grid used by generated scenarios."""

    length_m: float = Field(default=150.08, gt=0, description="Extent along x (whole cells)")
    width_m: float = Field(default=100.0, gt=0, description="Extent along y")
    cell_l: float = Field(default=0.16, gt=0, description="Cell size along x")
    cell_w: float = Field(default=0.16, gt=0, description="Cell size along y")
    origin: Optional[Tuple[float, float]] = Field(default=None, description="Minimum corner; null centers the grid")

    def to_spec(self) -> GridSpec:
        origin = self.origin if self.origin is not None else (-self.length_m / 2.0, -self.width_m / 2.0)
        return GridSpec(self.length_m, self.width_m, self.cell_l, self.cell_w, origin)


class ToySceneSettings(BaseModel):
    """Half-plane toy scene configuration."""

    size_m: float = Field(default=20.0, gt=0, description="Side of the square grid")
    cell: float = Field(default=0.1, gt=0, description="Cell size")
    boundary_x: float = Field(default=0.0, description="Drivable for x below this line")
    actor_length: float = Field(default=4.0, gt=0, description="Actor box length")
    actor_width: float = Field(default=2.0, gt=0, description="Actor box width")
    center: Tuple[float, float] = Field(default=(-0.5, 0.0), description="Initial actor center")
    tilt_deg: float = Field(default=30.0, description="Initial heading tilt from the boundary, in degrees")

    def build(self) -> ToyScene:
        return build_toy_scene(
            size_m=self.size_m,
            cell=self.cell,
            boundary_x=self.boundary_x,
            actor_length=self.actor_length,
            actor_width=self.actor_width,
            center=self.center,
            tilt=math.radians(self.tilt_deg),
        )


class OutputSettings(BaseModel):
    """Artifact output configuration."""

    out_dir: str = Field(default="out", description="Directory for reports, traces and images")
    emit_rasters: bool = Field(default=False, description="Write raster images next to reports")
    snapshot_every: int = Field(default=0, ge=0, description="Toy raster snapshot period (0 = final state only)")
    max_workers: int = Field(default=4, ge=1, description="Threads for sweeps and batch runs")


class LoggingSettings(BaseModel):
    """Logging configuration."""

    level: str = Field(default="INFO", description="Console log level")
    log_file: str = Field(default="", description="Optional log file")


class Settings(BaseModel):
    """Main application settings."""

    model_config = ConfigDict(populate_by_name=True)

    version: str = Field(default="1.0.0", description="Settings version")
    raster: RasterSettings = Field(default_factory=RasterSettings)
    loss: LossSettings = Field(default_factory=LossSettings)
    optimizer: OptimizerSettings = Field(default_factory=OptimizerSettings)
    grid: GridSettings = Field(default_factory=GridSettings)
    toy: ToySceneSettings = Field(default_factory=ToySceneSettings)
    output: OutputSettings = Field(default_factory=OutputSettings)
    logging: LoggingSettings = Field(default_factory=LoggingSettings)

    @classmethod
    def load_from_file(cls, file_path: Path) -> "Settings":
        """Load settings from a JSON file."""
        if file_path.exists():
            with open(file_path, "r", encoding="utf-8") as f:
                return cls.model_validate(json.load(f))
        return cls()

    def save_to_file(self, file_path: Path) -> None:
        """Save settings to a JSON file."""
        file_path.parent.mkdir(parents=True, exist_ok=True)
        with open(file_path, "w", encoding="utf-8") as f:
            json.dump(self.to_report(), f, indent=2)

    def to_report(self) -> Dict[str, Any]:
        """Effective configuration as embedded in every report."""
        return self.model_dump(mode="json", by_alias=True)

    def optimizer_config(self) -> OptimizerConfig:
        return OptimizerConfig(
            iterations=self.optimizer.iterations,
            step_size_xy=self.optimizer.step_size_xy,
            step_size_theta=self.optimizer.step_size_theta,
            truncation_md=self.raster.truncation_md,
            k=self.raster.k,
            fixed_sigma=self.raster.fixed_sigma,
        )

    def raster_kwargs(self) -> Dict[str, Any]:
        """Keyword arguments shared by the rasterizer and the ellipse loss."""
        return {"k": self.raster.k, "truncation_md": self.raster.truncation_md, "fixed_sigma": self.raster.fixed_sigma}
