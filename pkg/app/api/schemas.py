"""
Request and response models for the node API
"""

from typing import List, Optional

from pydantic import BaseModel, Field

from app.contract.schemas import CompResult


class ComparisonSubmission(CompResult):
    """A comparison result plus the submission time on the caller's clock."""

    ts: float = Field(default=0.0, ge=0.0, allow_inf_nan=False)


class SubmissionResponse(BaseModel):
    seq: int
    published_sets: List[int] = Field(default_factory=list)
    flagged_robots: List[int] = Field(default_factory=list)


class RobotStateResponse(BaseModel):
    robot: int
    byzantine: bool
    score: int


class ScoresResponse(BaseModel):
    scores: List[int]
    threshold: float
    completed_sets: int
    flags: List[bool]


class DigestResponse(BaseModel):
    applied_seq: int
    digest: str


class EdgeState(BaseModel):
    robot_a: int
    robot_b: int
    anomaly: Optional[bool] = None


class GraphResponse(BaseModel):
    set_id: int
    vertices: List[int]
    edges: List[EdgeState]
    complete: bool
