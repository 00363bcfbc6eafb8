"""
Byzantine detection contract: pair submissions, intersections, scoring and verdicts

The contract is a single-writer state machine. Every mutating operation
validates its input completely before touching state, so a rejected call
leaves the state exactly as it was.
"""

from typing import List, Optional, Sequence

import structlog
from pydantic import ValidationError as PydanticValidationError

from app.contract.schemas import (
    AuditEvent,
    CompResult,
    ComparisonGraph,
    ContractState,
)
from app.core.schemas import ContractConfig, PairRecord
from app.grid.schemas import IntersectionSet
from app.shared.config import settings
from app.shared.exceptions import (
    AuthorizationError,
    ConfigurationError,
    DuplicateSubmissionError,
    NotFoundError,
    ValidationError,
)
from app.shared.monitoring import contract_logger, performance_monitor

logger = structlog.get_logger(__name__)


def robot_identity(robot: int) -> str:
    """Caller identity a robot signs its transactions with."""
    return f"robot-{robot}"


def compute_threshold(scores: Sequence[int], m: float) -> float:
    """Flagging threshold: ``m`` times the mean score."""
    if not scores:
        raise ValidationError("cannot compute a threshold over no scores")
    return m * (sum(scores) / len(scores))


class DetectionContract:
    """
    Contract operations over a ContractState.

    Single Responsibility: Contract transaction semantics
    """

    def __init__(self, state: ContractState):
        self.state = state

    @classmethod
    def init(
        cls,
        f: int,
        n: int,
        d: float,
        delta: float,
        m: float = 1.3,
        min_completed_sets: int = 1,
        cloud_identity: Optional[str] = None,
    ) -> "DetectionContract":
        """
        Deploy a fresh contract.

        Single Responsibility: Contract initialization
        """
        try:
            config = ContractConfig(
                f=f, n=n, d=d, delta=delta, m=m, min_completed_sets=min_completed_sets
            )
        except PydanticValidationError as exc:
            raise ConfigurationError(f"invalid contract parameters: {exc}") from exc
        return cls.from_config(config, cloud_identity)

    @classmethod
    def from_config(
        cls, config: ContractConfig, cloud_identity: Optional[str] = None
    ) -> "DetectionContract":
        identity = cloud_identity or settings.cloud_identity
        logger.info("contract_initialized", f=config.f, n=config.n, m=config.m)
        return cls(ContractState.fresh(config, identity))

    @property
    def config(self) -> ContractConfig:
        return self.state.config

    # Mutating operations

    def submit_pair(
        self, caller: str, pair: PairRecord, timestamp: float = 0.0
    ) -> List[IntersectionSet]:
        """
        Store a robot's image digest and publish any intersection it completes.

        Single Responsibility: Pair submission
        """
        with performance_monitor.track_submit_pair():
            if pair.robot >= self.config.n:
                raise ValidationError(f"robot {pair.robot} is outside [0, {self.config.n})")
            if caller != robot_identity(pair.robot):
                raise AuthorizationError(
                    f"{caller} cannot submit a pair for robot {pair.robot}"
                )
            last_time = self.state.last_pair_times[pair.robot]
            if last_time is not None and pair.time < last_time:
                raise ValidationError(
                    f"robot {pair.robot} submitted a pair at t={pair.time} after one at t={last_time}"
                )
            # insert_pair validates before it mutates the grid
            self.state.grid.insert_pair(pair)
            self.state.last_pair_times[pair.robot] = pair.time
            self._audit("pair_accepted", caller, pair.digest.hex(), timestamp=timestamp)
            contract_logger.log_pair_accepted(pair.robot, pair.digest, pair.pose.x, pair.pose.y)

            published = self.state.grid.find_intersections(self.config.f, self.config.delta)
            for intersection in published:
                self.state.intersections.append(intersection)
                self.state.graphs[intersection.set_id] = ComparisonGraph.for_set(intersection)
                self._audit(
                    "set_published",
                    caller,
                    str(intersection.set_id),
                    detail=",".join(str(robot) for robot in intersection.robots),
                    timestamp=timestamp,
                )
                contract_logger.log_set_published(
                    intersection.set_id, intersection.robots, tuple(intersection.origin_cell)
                )
            performance_monitor.track_intersections(len(published))
        performance_monitor.track_transaction("submitPair")
        return published

    def submit_comparison(
        self, caller: str, result: CompResult, timestamp: float = 0.0
    ) -> List[int]:
        """
        Record one comparison edge; a red edge scores both endpoints.

        Returns the robots newly flagged as a consequence (usually none).

        Single Responsibility: Comparison submission and scoring
        """
        if caller != self.state.cloud_identity:
            raise AuthorizationError(f"{caller} does not hold the processing-cloud role")
        graph = self.state.graphs.get(result.set_id)
        if graph is None:
            raise NotFoundError(f"intersection set {result.set_id} does not exist")
        edge = result.edge
        if edge not in graph.edges:
            raise ValidationError(
                f"robots {edge} are not both members of set {result.set_id}"
            )
        if graph.edges[edge] is not None:
            raise DuplicateSubmissionError(
                f"edge {edge} of set {result.set_id} was already submitted"
            )

        graph.edges[edge] = result.anomaly
        if result.anomaly:
            for robot in edge:
                self.state.scores[robot] += 1
        self._audit(
            "comparison_recorded",
            caller,
            f"{result.set_id}:{edge[0]}-{edge[1]}",
            detail="red" if result.anomaly else "clear",
            timestamp=timestamp,
        )
        performance_monitor.track_transaction("submitComparison")

        if not graph.complete:
            return []
        self.state.completed_sets += 1
        self._audit("set_completed", caller, str(result.set_id), timestamp=timestamp)
        return self.classify(timestamp=timestamp)

    def classify(self, timestamp: float = 0.0) -> List[int]:
        """
        Flag every robot whose score is strictly above the threshold.

        Nothing happens until ``min_completed_sets`` graphs are complete, and a
        flag once set is never cleared.

        Single Responsibility: Byzantine classification
        """
        if self.state.completed_sets < self.config.min_completed_sets:
            return []
        threshold = compute_threshold(self.state.scores, self.config.m)
        newly_flagged: List[int] = []
        for robot, score in enumerate(self.state.scores):
            if score > threshold and not self.state.byz_flags[robot]:
                self.state.byz_flags[robot] = True
                newly_flagged.append(robot)
                self._audit(
                    "robot_flagged",
                    self.state.cloud_identity,
                    str(robot),
                    detail=f"score={score}",
                    timestamp=timestamp,
                )
                contract_logger.log_robot_flagged(robot, score, threshold)
        return newly_flagged

    def record_rejection(
        self, caller: str, op: str, reason: str, timestamp: float = 0.0
    ) -> None:
        """Append a rejection to the audit log; used when applying ledger entries."""
        self._audit("rejected", caller, op, detail=reason, timestamp=timestamp)
        performance_monitor.track_transaction(op, status="rejected")
        contract_logger.log_rejection(op, caller, reason)

    # Views

    def get_intersection(self) -> List[IntersectionSet]:
        """
        Published sets still missing comparisons. Polling does not consume them.

        Single Responsibility: Pending set retrieval
        """
        return [
            intersection
            for intersection in self.state.intersections
            if not self.state.graphs[intersection.set_id].complete
        ]

    def get_comparison_graph(self, set_id: int) -> ComparisonGraph:
        graph = self.state.graphs.get(set_id)
        if graph is None:
            raise NotFoundError(f"intersection set {set_id} does not exist")
        return graph

    def get_robot_state(self, robot: int) -> bool:
        """
        Current byzantine flag of a robot.

        Single Responsibility: Verdict retrieval
        """
        if not 0 <= robot < self.config.n:
            raise NotFoundError(f"robot {robot} is not registered")
        return self.state.byz_flags[robot]

    def threshold(self) -> float:
        return compute_threshold(self.state.scores, self.config.m)

    def _audit(
        self,
        kind: str,
        caller: str,
        subject: str,
        detail: str = "",
        timestamp: float = 0.0,
    ) -> None:
        self.state.audit.append(
            AuditEvent(
                kind=kind,
                caller=caller,
                subject=subject,
                detail=detail,
                timestamp=timestamp,
            )
        )
