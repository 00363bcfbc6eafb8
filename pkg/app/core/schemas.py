"""
Shared domain types: poses, image digests, submitted pairs, contract parameters
Reference: https://docs.pydantic.dev/latest/concepts/models/
"""

import math
from typing import Annotated, Any

from pydantic import (
    BaseModel,
    BeforeValidator,
    ConfigDict,
    Field,
    PlainSerializer,
    field_validator,
    model_validator,
)

DIGEST_SIZE = 32
TWO_PI = 2.0 * math.pi


def normalize_angle(theta: float) -> float:
    """Wrap an angle into the half-open range [-pi, pi)."""
    if -math.pi <= theta < math.pi:
        return theta
    wrapped = (theta + math.pi) % TWO_PI - math.pi
    # float modulo can land exactly on the excluded upper bound
    if wrapped >= math.pi:
        wrapped -= TWO_PI
    return wrapped


def _coerce_digest(value: Any) -> bytes:
    if isinstance(value, str):
        try:
            value = bytes.fromhex(value)
        except ValueError as exc:
            raise ValueError("digest must be a hex string") from exc
    if not isinstance(value, (bytes, bytearray)):
        raise ValueError("digest must be bytes")
    if len(value) != DIGEST_SIZE:
        raise ValueError(f"digest must be exactly {DIGEST_SIZE} bytes, got {len(value)}")
    return bytes(value)


# ids travel as u32 and set ids as u64 in the canonical encoding
MAX_ROBOT_ID = 2**32 - 1
MAX_SET_ID = 2**64 - 1

RobotId = Annotated[int, Field(ge=0, le=MAX_ROBOT_ID)]
SetId = Annotated[int, Field(ge=0, le=MAX_SET_ID)]
Timestamp = Annotated[float, Field(ge=0.0, allow_inf_nan=False)]
ImageDigest = Annotated[
    bytes,
    BeforeValidator(_coerce_digest),
    PlainSerializer(lambda value: value.hex(), return_type=str, when_used="json"),
]


class Pose(BaseModel):
    """
    Planar position (meters) and heading (radians) of a robot.

    Single Responsibility: Pose representation and normalization
    """

    model_config = ConfigDict(frozen=True)

    x: float = Field(allow_inf_nan=False)
    y: float = Field(allow_inf_nan=False)
    theta: float = Field(default=0.0, allow_inf_nan=False)

    @field_validator("theta")
    @classmethod
    def _wrap_theta(cls, value: float) -> float:
        return normalize_angle(value)


class PairRecord(BaseModel):
    """
    An image digest bound to the robot that captured it, its pose and time.

    Single Responsibility: Submitted pair representation
    """

    model_config = ConfigDict(frozen=True)

    robot: RobotId
    digest: ImageDigest
    pose: Pose
    time: Timestamp

    @property
    def sort_key(self) -> tuple:
        return (self.robot, self.digest)


class ContractConfig(BaseModel):
    """
    Parameters of the detection contract.

    ``f`` byzantine robots are tolerated, so intersections need ``3f+1``
    members. ``d``/``delta`` bound distance and heading difference inside an
    intersection and ``m`` multiplies the mean score to get the threshold.

    Single Responsibility: Contract parameter validation
    """

    model_config = ConfigDict(frozen=True)

    f: int = Field(gt=0)
    n: int = Field(gt=0)
    d: float = Field(gt=0.0, allow_inf_nan=False)
    delta: float = Field(gt=0.0, lt=math.pi)
    m: float = Field(default=1.3, gt=1.0, allow_inf_nan=False)
    min_completed_sets: int = Field(default=1, ge=1)

    @model_validator(mode="after")
    def _check_robot_count(self) -> "ContractConfig":
        if self.n < 3 * self.f + 1:
            raise ValueError(f"n={self.n} is below 3f+1={3 * self.f + 1}")
        return self

    @property
    def set_size(self) -> int:
        return 3 * self.f + 1

    @classmethod
    def field_preset(cls, **overrides: Any) -> "ContractConfig":
        """Parameters of the four-robot field trial with the 30% margin (m=1.3)."""
        values: dict = {"f": 1, "n": 4, "d": 0.5, "delta": 0.4, "m": 1.3}
        values.update(overrides)
        return cls(**values)

    @classmethod
    def plotted_preset(cls, **overrides: Any) -> "ContractConfig":
        """Same trial with m=1.33, the multiplier the plotted thresholds follow."""
        return cls.field_preset(**{"m": 1.33, **overrides})
