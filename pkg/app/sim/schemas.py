"""
Experiment configuration models and YAML loading
Reference: https://docs.pydantic.dev/latest/concepts/validators/
"""

import math
from pathlib import Path
from typing import Any, List, Literal, Optional, Tuple, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from pydantic import ValidationError as PydanticValidationError

from app.core.schemas import ContractConfig, Pose, RobotId, Timestamp
from app.oracle.schemas import OracleSettings
from app.shared.exceptions import ConfigurationError

Point = Tuple[float, float]


class TrajectoryPlan(BaseModel):
    """
    Predefined route: constant speed along a polyline, from ``start_time``.

    Waypoints may be written as ``[x, y]``; their headings are ignored since
    the robot always faces along the current segment.
    """

    model_config = ConfigDict(frozen=True)

    waypoints: List[Pose] = Field(min_length=2)
    speed: float = Field(gt=0.0, allow_inf_nan=False)
    start_time: Timestamp = 0.0

    @field_validator("waypoints", mode="before")
    @classmethod
    def _accept_coordinate_lists(cls, value: Any) -> Any:
        if not isinstance(value, list):
            return value
        converted = []
        for point in value:
            if isinstance(point, (list, tuple)):
                converted.append(dict(zip(("x", "y", "theta"), point)))
            else:
                converted.append(point)
        return converted

    @model_validator(mode="after")
    def _check_length(self) -> "TrajectoryPlan":
        if self.length <= 0.0:
            raise ValueError("trajectory waypoints are all at the same position")
        return self

    @property
    def length(self) -> float:
        return sum(
            math.hypot(b.x - a.x, b.y - a.y)
            for a, b in zip(self.waypoints, self.waypoints[1:])
        )

    @property
    def end_time(self) -> float:
        return self.start_time + self.length / self.speed


class AgentBehavior(BaseModel):
    """
    Honest robots report what they see; byzantine ones alter the content per
    ``policy``: every image, each image with ``probability``, or only inside a
    circular region.
    """

    model_config = ConfigDict(frozen=True)

    kind: Literal["honest", "byzantine"] = "honest"
    policy: Literal["always", "probability", "region"] = "always"
    probability: float = Field(default=1.0, ge=0.0, le=1.0)
    region_center: Optional[Point] = None
    region_radius: Optional[float] = Field(default=None, gt=0.0)

    @model_validator(mode="after")
    def _check_region(self) -> "AgentBehavior":
        if self.kind == "byzantine" and self.policy == "region":
            if self.region_center is None or self.region_radius is None:
                raise ValueError("region policy needs region_center and region_radius")
        return self

    @property
    def byzantine(self) -> bool:
        return self.kind == "byzantine"


class RobotSettings(BaseModel):
    model_config = ConfigDict(frozen=True)

    id: RobotId
    trajectory: TrajectoryPlan
    behavior: AgentBehavior = Field(default_factory=AgentBehavior)


class StreamRates(BaseModel):
    """Pose and image publication rates in Hz."""

    model_config = ConfigDict(frozen=True)

    pose_hz: float = Field(default=120.0, gt=0.0, allow_inf_nan=False)
    image_hz: float = Field(default=1.0, gt=0.0, allow_inf_nan=False)

    @model_validator(mode="after")
    def _poses_faster_than_images(self) -> "StreamRates":
        if self.pose_hz <= self.image_hz:
            raise ValueError("pose_hz must exceed image_hz")
        return self


class SceneChange(BaseModel):
    """
    An object added to or removed from the scene at ``time``.

    Without ``center``/``radius`` the change is visible from everywhere.
    """

    model_config = ConfigDict(frozen=True)

    time: Timestamp
    label: str = Field(min_length=1)
    center: Optional[Point] = None
    radius: Optional[float] = Field(default=None, gt=0.0)

    @model_validator(mode="after")
    def _region_complete(self) -> "SceneChange":
        if (self.center is None) != (self.radius is None):
            raise ValueError("a regional change needs both center and radius")
        return self


class SceneSettings(BaseModel):
    model_config = ConfigDict(frozen=True)

    arena_size: float = Field(default=7.0, gt=0.0)  # side of the square arena, meters
    changes: List[SceneChange] = Field(default_factory=list)


class ExperimentConfig(BaseModel):
    """
    Everything a run needs; the same config and seed always give the same run.

    Single Responsibility: Experiment parameter validation
    """

    model_config = ConfigDict(frozen=True)

    name: str = "experiment"
    seed: int = Field(default=0, ge=0, lt=2**64)
    duration: float = Field(gt=0.0, allow_inf_nan=False)
    contract: ContractConfig
    rates: StreamRates = Field(default_factory=StreamRates)
    oracle: OracleSettings = Field(default_factory=OracleSettings)
    scene: SceneSettings = Field(default_factory=SceneSettings)
    robots: List[RobotSettings] = Field(min_length=1)

    @model_validator(mode="after")
    def _check_consistency(self) -> "ExperimentConfig":
        ids = [robot.id for robot in self.robots]
        if sorted(ids) != list(range(self.contract.n)):
            raise ValueError(
                f"robot ids must be exactly 0..{self.contract.n - 1}, got {sorted(ids)}"
            )
        size = self.scene.arena_size
        for robot in self.robots:
            for waypoint in robot.trajectory.waypoints:
                if not (0.0 <= waypoint.x <= size and 0.0 <= waypoint.y <= size):
                    raise ValueError(
                        f"robot {robot.id} waypoint ({waypoint.x}, {waypoint.y}) "
                        f"is outside the {size} m arena"
                    )
        return self

    @property
    def ordered_robots(self) -> List[RobotSettings]:
        return sorted(self.robots, key=lambda robot: robot.id)

    def with_seed(self, seed: Optional[int]) -> "ExperimentConfig":
        if seed is None:
            return self
        return self.model_validate({**self.model_dump(), "seed": seed})


def load_experiment(path: Union[str, Path], seed: Optional[int] = None) -> ExperimentConfig:
    """
    Read and validate an experiment YAML file.

    Single Responsibility: Experiment file loading
    """
    source = Path(path)
    try:
        raw = yaml.safe_load(source.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigurationError(f"cannot read experiment file {source}: {exc.strerror}") from exc
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"{source} is not valid YAML: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigurationError(f"{source} must contain a mapping at top level")
    try:
        return ExperimentConfig.model_validate(raw).with_seed(seed)
    except PydanticValidationError as exc:
        raise ConfigurationError(f"invalid experiment file {source}:\n{exc}") from exc
