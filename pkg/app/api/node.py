"""
Ledger node behind the HTTP interface
"""

import threading
from typing import List, Optional

import structlog

from app.contract.schemas import CompResult
from app.core.schemas import ContractConfig, PairRecord
from app.ledger.service import LedgerCluster
from app.shared.config import settings

logger = structlog.get_logger(__name__)


class ContractNode:
    """
    A sequencer and one contract replica serving robots and the cloud.

    Submissions are serialized so each one is applied before the next is
    ordered; rejected transactions still consume a sequence number.

    Single Responsibility: Networked contract access
    """

    def __init__(self, config: ContractConfig, cloud_identity: Optional[str] = None, node_id: str = "node-0"):
        self.cloud_identity = cloud_identity or settings.cloud_identity
        self.cluster = LedgerCluster([node_id], verify=False)
        self.cluster.deploy(self.cloud_identity, config, self.cloud_identity)
        self._lock = threading.Lock()

    @classmethod
    def from_settings(cls) -> "ContractNode":
        config = ContractConfig(
            f=settings.node_f,
            n=settings.node_n,
            d=settings.node_d,
            delta=settings.node_delta,
            m=settings.node_m,
            min_completed_sets=settings.node_min_completed_sets,
        )
        return cls(config)

    @property
    def contract(self):
        return self.cluster.contract

    @property
    def replica(self):
        return self.cluster.primary

    def submit_pair(self, caller: str, pair: PairRecord) -> tuple:
        """Returns (seq, newly published set ids); raises the contract's rejection."""
        with self._lock:
            before = len(self.contract.state.intersections)
            seq, rejection = self.cluster.submit_pair(caller, pair, ts=pair.time)
            if rejection is not None:
                raise rejection
            published = [
                intersection.set_id
                for intersection in self.contract.state.intersections[before:]
            ]
        logger.info("pair_submitted", seq=seq, caller=caller, published=published)
        return seq, published

    def submit_comparison(self, caller: str, result: CompResult, ts: float) -> tuple:
        """Returns (seq, newly flagged robots); raises the contract's rejection."""
        with self._lock:
            flags_before = list(self.contract.state.byz_flags)
            seq, rejection = self.cluster.submit_comparison(caller, result, ts=ts)
            if rejection is not None:
                raise rejection
            flagged: List[int] = [
                robot
                for robot, flag in enumerate(self.contract.state.byz_flags)
                if flag and not flags_before[robot]
            ]
        return seq, flagged


_node: Optional[ContractNode] = None


def get_node() -> ContractNode:
    """FastAPI dependency returning the process-wide node, created on first use."""
    global _node
    if _node is None:
        _node = ContractNode.from_settings()
    return _node
