"""
Schemas for images held by the processing cloud and oracle selection
"""

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field

from app.core.schemas import ImageDigest

# Scene tokens share the digest encoding: 32 opaque bytes, hex in JSON
SceneToken = ImageDigest


class ImageSample(BaseModel):
    """
    An image as the comparison back-end sees it: its digest and visual content.

    Single Responsibility: Comparison input representation
    """

    model_config = ConfigDict(frozen=True)

    digest: ImageDigest
    token: SceneToken


class NoisyOracleConfig(BaseModel):
    """
    False-positive rate ``alpha``, false-negative rate ``beta`` and the seed
    of the per-pair draw.
    """

    model_config = ConfigDict(frozen=True)

    alpha: float = Field(default=0.0, ge=0.0, lt=1.0)
    beta: float = Field(default=0.0, ge=0.0, lt=1.0)
    seed: int = Field(default=0, ge=0, lt=2**64)


class OracleSettings(BaseModel):
    """Oracle section of an experiment file; the seed comes from the run."""

    kind: Literal["exact", "noisy"] = "exact"
    alpha: float = Field(default=0.0, ge=0.0, lt=1.0)
    beta: float = Field(default=0.0, ge=0.0, lt=1.0)
