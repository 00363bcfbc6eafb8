"""
Run report: the data behind the score timeline and intersection map
"""

from typing import Any, Dict, List, Optional, Tuple

from pydantic import BaseModel, Field

from app.ledger.schemas import Transaction


class ScoreRow(BaseModel):
    time: float
    robot: int
    score: int
    threshold: float


class IntersectionRow(BaseModel):
    set_id: int
    x: float
    y: float
    heading: float
    robots: List[int]
    digests: List[str]
    published_at: float


class VerdictRow(BaseModel):
    robot: int
    flagged: bool
    flag_time: Optional[float] = None
    score: int


class TrajectoryRow(BaseModel):
    time: float
    robot: int
    x: float
    y: float
    theta: float


class RunStats(BaseModel):
    pairs_submitted: int = 0
    images_dropped: int = 0
    images_altered: int = 0
    rejections: int = 0
    sets_published: int = 0
    completed_sets: int = 0
    ledger_entries: int = 0


class RunReport(BaseModel):
    """
    Outcome of one experiment run.

    Every threshold in ``score_timeline`` is ``m`` times the mean of the
    scores at that time, and ``verdicts`` mirror the final contract flags.
    Nothing in it depends on wall-clock time.

    Single Responsibility: Experiment result container
    """

    name: str
    seed: int
    config: Dict[str, Any]
    score_timeline: List[ScoreRow] = Field(default_factory=list)
    intersections: List[IntersectionRow] = Field(default_factory=list)
    verdicts: List[VerdictRow] = Field(default_factory=list)
    trajectories: List[TrajectoryRow] = Field(default_factory=list)
    final_scores: List[int] = Field(default_factory=list)
    final_threshold: float = 0.0
    final_digest: str = ""
    digest_trail: List[str] = Field(default_factory=list)
    stats: RunStats = Field(default_factory=RunStats)
    ledger: List[Transaction] = Field(default_factory=list, exclude=True)

    @property
    def flagged_robots(self) -> Tuple[int, ...]:
        return tuple(row.robot for row in self.verdicts if row.flagged)

    def summary(self) -> Dict[str, Any]:
        """Fields written to report.json."""
        return self.model_dump(
            mode="json",
            exclude={"score_timeline", "intersections", "verdicts", "trajectories"},
        )
