"""
Pydantic models for contract state, comparison results and audit events
Reference: https://docs.pydantic.dev/latest/concepts/models/
"""

import itertools
from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.core.schemas import ContractConfig, RobotId, SetId
from app.grid.schemas import IntersectionSet
from app.grid.service import SpatialGrid

Edge = Tuple[int, int]


def make_edge(robot_a: int, robot_b: int) -> Edge:
    """Unordered robot pair, stored smallest id first."""
    return (robot_a, robot_b) if robot_a < robot_b else (robot_b, robot_a)


class CompResult(BaseModel):
    """
    Outcome of one pairwise image comparison inside a published set.

    Single Responsibility: Comparison result validation
    """

    model_config = ConfigDict(frozen=True)

    set_id: SetId
    robot_a: RobotId
    robot_b: RobotId
    anomaly: bool

    @model_validator(mode="after")
    def _distinct_robots(self) -> "CompResult":
        if self.robot_a == self.robot_b:
            raise ValueError("a comparison needs two different robots")
        return self

    @property
    def edge(self) -> Edge:
        return make_edge(self.robot_a, self.robot_b)


class ComparisonGraph(BaseModel):
    """
    Complete graph over a set's member robots; an edge is red when anomalous.

    Single Responsibility: Per-set comparison bookkeeping
    """

    set_id: int
    vertices: Tuple[int, ...]
    edges: Dict[Edge, Optional[bool]]

    @classmethod
    def for_set(cls, intersection: IntersectionSet) -> "ComparisonGraph":
        vertices = tuple(sorted(intersection.robots))
        return cls(
            set_id=intersection.set_id,
            vertices=vertices,
            edges={edge: None for edge in itertools.combinations(vertices, 2)},
        )

    @property
    def complete(self) -> bool:
        return all(value is not None for value in self.edges.values())

    @property
    def missing_edges(self) -> List[Edge]:
        return [edge for edge, value in self.edges.items() if value is None]

    @property
    def red_edges(self) -> List[Edge]:
        return [edge for edge, value in self.edges.items() if value]

    def degree(self, robot: int) -> int:
        """Number of red edges incident to ``robot``."""
        return sum(1 for edge in self.red_edges if robot in edge)


class AuditEvent(BaseModel):
    """
    One entry of the contract's append-only audit log.

    ``kind`` is one of pair_accepted, set_published, comparison_recorded,
    set_completed, robot_flagged, rejected.
    """

    model_config = ConfigDict(frozen=True)

    kind: str
    caller: str
    subject: str
    detail: str = ""
    timestamp: float = 0.0


class ContractState(BaseModel):
    """
    Replicated contract state.

    Scores only grow and flags are sticky. ``graphs`` holds every published
    set's comparison graph; the incomplete ones are the pending sets.
    ``last_pair_times`` keeps each robot's latest accepted pair time.

    Single Responsibility: Contract state container
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    config: ContractConfig
    cloud_identity: str
    scores: List[int]
    byz_flags: List[bool]
    grid: SpatialGrid
    last_pair_times: List[Optional[float]] = Field(default_factory=list)
    graphs: Dict[int, ComparisonGraph] = Field(default_factory=dict)
    completed_sets: int = 0
    intersections: List[IntersectionSet] = Field(default_factory=list)
    audit: List[AuditEvent] = Field(default_factory=list)

    @classmethod
    def fresh(cls, config: ContractConfig, cloud_identity: str) -> "ContractState":
        return cls(
            config=config,
            cloud_identity=cloud_identity,
            scores=[0] * config.n,
            byz_flags=[False] * config.n,
            grid=SpatialGrid(config.d),
            last_pair_times=[None] * config.n,
        )

    @property
    def pending(self) -> Dict[int, ComparisonGraph]:
        return {set_id: graph for set_id, graph in self.graphs.items() if not graph.complete}
