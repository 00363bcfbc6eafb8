"""
Processing-cloud agent: polls for pending intersection sets and submits comparisons
"""

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, Protocol, Tuple

import structlog

from app.contract.schemas import CompResult, ComparisonGraph, Edge
from app.contract.service import DetectionContract
from app.grid.schemas import IntersectionSet
from app.oracle.backends import ComparisonOracle
from app.oracle.schemas import ImageSample
from app.oracle.storage import ImageStorage
from app.shared.config import settings
from app.shared.exceptions import BaseAppException, NotFoundError

logger = structlog.get_logger(__name__)


class ContractGateway(Protocol):
    """Contract view plus submit access, as seen from the processing cloud."""

    def get_intersection(self) -> List[IntersectionSet]: ...

    def get_comparison_graph(self, set_id: int) -> ComparisonGraph: ...

    def submit_comparison(self, result: CompResult) -> None:
        """Raise a BaseAppException when the contract rejects the result."""
        ...


class DirectGateway:
    """
    Gateway onto an in-process contract, without a ledger in between.

    Single Responsibility: Local contract access for the cloud agent
    """

    def __init__(
        self,
        contract: DetectionContract,
        identity: Optional[str] = None,
        clock: Callable[[], float] = lambda: 0.0,
    ):
        self.contract = contract
        self.identity = identity or contract.state.cloud_identity
        self.clock = clock

    def get_intersection(self) -> List[IntersectionSet]:
        return self.contract.get_intersection()

    def get_comparison_graph(self, set_id: int) -> ComparisonGraph:
        return self.contract.get_comparison_graph(set_id)

    def submit_comparison(self, result: CompResult) -> None:
        self.contract.submit_comparison(self.identity, result, timestamp=self.clock())


ComparisonTask = Tuple[int, Edge, ImageSample, ImageSample]


class CloudAgent:
    """
    Runs the oracle on every missing edge of every pending set.

    Verdicts may be computed on a worker pool; results are always submitted in
    set order, then edge order, so the ledger sees the same sequence
    regardless of the pool size.

    Single Responsibility: Comparison scheduling and submission
    """

    def __init__(
        self,
        oracle: ComparisonOracle,
        storage: ImageStorage,
        workers: Optional[int] = None,
    ):
        self.oracle = oracle
        self.storage = storage
        self.workers = workers if workers is not None else settings.oracle_workers

    def step(self, gateway: ContractGateway) -> List[CompResult]:
        """
        Submit one result per missing edge. Rejections are logged, not raised.

        Single Responsibility: One polling round
        """
        tasks = self._collect_tasks(gateway)
        if not tasks:
            return []

        verdicts = self._evaluate(tasks)
        submitted: List[CompResult] = []
        for (set_id, edge, _, _), anomaly in zip(tasks, verdicts):
            result = CompResult(
                set_id=set_id, robot_a=edge[0], robot_b=edge[1], anomaly=anomaly
            )
            try:
                gateway.submit_comparison(result)
            except BaseAppException as exc:
                logger.warning(
                    "comparison_rejected", set_id=set_id, edge=list(edge), error=exc.message
                )
                continue
            submitted.append(result)

        logger.debug("cloud_step_completed", submitted=len(submitted), tasks=len(tasks))
        return submitted

    def _collect_tasks(self, gateway: ContractGateway) -> List[ComparisonTask]:
        tasks: List[ComparisonTask] = []
        for intersection in gateway.get_intersection():
            graph = gateway.get_comparison_graph(intersection.set_id)
            for edge in graph.missing_edges:
                try:
                    first = self.storage.sample(intersection.member_for(edge[0]).digest)
                    second = self.storage.sample(intersection.member_for(edge[1]).digest)
                except NotFoundError as exc:
                    logger.warning(
                        "comparison_skipped",
                        set_id=intersection.set_id,
                        edge=list(edge),
                        error=exc.message,
                    )
                    continue
                tasks.append((intersection.set_id, edge, first, second))
        return tasks

    def _evaluate(self, tasks: List[ComparisonTask]) -> List[bool]:
        if self.workers <= 1 or len(tasks) == 1:
            return [self.oracle(first, second) for _, _, first, second in tasks]
        with ThreadPoolExecutor(max_workers=self.workers) as executor:
            # map preserves input order
            return list(
                executor.map(lambda task: self.oracle(task[2], task[3]), tasks)
            )
