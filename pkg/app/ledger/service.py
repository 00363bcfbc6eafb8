"""
Simulated ledger: a single sequencer, contract replicas and deterministic replay

A sequencer stands in for the chain committee. Every node applies the same
totally-ordered log to its own contract replica; contract-level rejections
are ordered and audited like any other transaction so replicas agree on
failures as well.
"""

import threading
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import structlog

from app.contract.schemas import CompResult, ComparisonGraph, ContractState
from app.contract.service import DetectionContract
from app.core.schemas import ContractConfig, PairRecord
from app.grid.schemas import IntersectionSet
from app.ledger.codec import (
    decode_payload,
    encode_comparison,
    encode_init,
    encode_pair,
    state_digest,
)
from app.ledger.schemas import (
    OP_INIT,
    OP_SUBMIT_COMPARISON,
    OP_SUBMIT_PAIR,
    Operation,
    Transaction,
)
from app.shared.exceptions import (
    BaseAppException,
    DuplicateSubmissionError,
    OrderingError,
    ReplayError,
    ValidationError,
)
from app.shared.monitoring import performance_monitor

logger = structlog.get_logger(__name__)


class LedgerLog:
    """
    Append-only, gapless transaction log.

    Single Responsibility: Total ordering of transactions
    """

    def __init__(self, entries: Optional[Iterable[Transaction]] = None):
        self.entries: List[Transaction] = []
        self._lock = threading.Lock()
        for tx in entries or ():
            if tx.seq != len(self.entries):
                raise OrderingError(f"expected seq {len(self.entries)}, got {tx.seq}")
            self.entries.append(tx)

    def append(self, caller: str, op: Operation, payload: bytes, ts: float = 0.0) -> int:
        """
        Validate the payload, then assign the next sequence number.

        Single Responsibility: Transaction admission
        """
        decode_payload(op, payload)
        with self._lock:
            seq = len(self.entries)
            self.entries.append(
                Transaction(seq=seq, caller=caller, op=op, payload=payload, ts=ts)
            )
        logger.debug("transaction_appended", seq=seq, op=op, caller=caller)
        return seq

    def __getitem__(self, seq: int) -> Transaction:
        return self.entries[seq]

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)


class Replica:
    """
    One node's copy of the contract, advanced one sequence number at a time.

    Single Responsibility: Sequential transaction application
    """

    def __init__(self, node_id: str):
        self.node_id = node_id
        self.applied_seq = -1
        self.contract: Optional[DetectionContract] = None

    @property
    def state(self) -> ContractState:
        if self.contract is None:
            raise OrderingError(f"replica {self.node_id} has no contract deployed yet")
        return self.contract.state

    def apply(self, tx: Transaction) -> Optional[BaseAppException]:
        """
        Execute one transaction and return the contract's rejection, if any.

        Sequence gaps, a missing ``init`` and undecodable payloads raise and
        leave the replica untouched. A contract rejection is audited and still
        advances ``applied_seq``.

        Single Responsibility: Transaction execution
        """
        if tx.seq != self.applied_seq + 1:
            raise OrderingError(
                f"replica {self.node_id} expected seq {self.applied_seq + 1}, got {tx.seq}"
            )
        args = decode_payload(tx.op, tx.payload)
        if self.contract is None and tx.op != OP_INIT:
            raise OrderingError(f"seq {tx.seq} arrives before the contract is deployed")

        rejection: Optional[BaseAppException] = None
        try:
            if tx.op == OP_INIT:
                if self.contract is not None:
                    raise DuplicateSubmissionError("contract is already deployed")
                config, cloud_identity = args  # type: ignore[misc]
                self.contract = DetectionContract.from_config(config, cloud_identity)
            elif tx.op == OP_SUBMIT_PAIR:
                self.contract.submit_pair(tx.caller, args, timestamp=tx.ts)  # type: ignore[union-attr,arg-type]
            else:
                self.contract.submit_comparison(tx.caller, args, timestamp=tx.ts)  # type: ignore[union-attr,arg-type]
        except BaseAppException as exc:
            rejection = exc
            if self.contract is not None:
                self.contract.record_rejection(tx.caller, tx.op, exc.message, timestamp=tx.ts)

        self.applied_seq = tx.seq
        return rejection

    def digest(self) -> bytes:
        return state_digest(self.state)


def replay(entries: Sequence[Transaction]) -> ContractState:
    """
    Fold ``apply`` over a log onto a fresh replica.

    Single Responsibility: Deterministic state reconstruction
    """
    replica = Replica("replay")
    for index, tx in enumerate(entries):
        try:
            replica.apply(tx)
        except (OrderingError, ValidationError) as exc:
            raise ReplayError(exc.message, index=index) from exc
    if replica.contract is None:
        raise ReplayError("log does not start with init", index=0)
    return replica.state


class LedgerCluster:
    """
    Sequencer plus a set of replicas that apply every appended transaction.

    With ``verify`` on, all replicas' digests are compared after each
    sequence number and kept as a trail; the first replica serves reads.

    Single Responsibility: Replicated submission and agreement checking
    """

    def __init__(self, node_ids: Sequence[str], verify: bool = True):
        if not node_ids:
            raise ValidationError("a ledger cluster needs at least one replica")
        self.log = LedgerLog()
        self.replicas: List[Replica] = [Replica(node_id) for node_id in node_ids]
        self.verify = verify
        self.digest_trail: List[bytes] = []

    @property
    def primary(self) -> Replica:
        return self.replicas[0]

    @property
    def contract(self) -> DetectionContract:
        if self.primary.contract is None:
            raise OrderingError("no contract deployed yet")
        return self.primary.contract

    def submit(
        self, caller: str, op: Operation, payload: bytes, ts: float = 0.0
    ) -> Tuple[int, Optional[BaseAppException]]:
        """
        Order one transaction and apply it on every replica.

        Returns the sequence number and the contract's rejection, if any.
        """
        if op != OP_INIT and self.primary.contract is None:
            raise OrderingError(f"{op} submitted before the contract is deployed")
        seq = self.log.append(caller, op, payload, ts)
        tx = self.log[seq]
        rejection: Optional[BaseAppException] = None
        for replica in self.replicas:
            rejection = replica.apply(tx)
        if self.verify:
            self._check_agreement(seq)
        return seq, rejection

    def deploy(self, caller: str, config: ContractConfig, cloud_identity: str, ts: float = 0.0) -> int:
        seq, rejection = self.submit(caller, OP_INIT, encode_init(config, cloud_identity), ts)
        if rejection is not None:
            raise rejection
        return seq

    def submit_pair(
        self, caller: str, pair: PairRecord, ts: float = 0.0
    ) -> Tuple[int, Optional[BaseAppException]]:
        return self.submit(caller, OP_SUBMIT_PAIR, encode_pair(pair), ts)

    def submit_comparison(
        self, caller: str, result: CompResult, ts: float = 0.0
    ) -> Tuple[int, Optional[BaseAppException]]:
        return self.submit(caller, OP_SUBMIT_COMPARISON, encode_comparison(result), ts)

    def _check_agreement(self, seq: int) -> None:
        digests: Dict[str, bytes] = {
            replica.node_id: replica.digest() for replica in self.replicas
        }
        reference = digests[self.primary.node_id]
        diverged = [node for node, value in digests.items() if value != reference]
        performance_monitor.track_digest_check(not diverged)
        if diverged:
            logger.error("replica_divergence", seq=seq, nodes=diverged)
            raise ReplayError(f"replicas {diverged} diverged", index=seq)
        self.digest_trail.append(reference)


class LedgerGateway:
    """
    Cloud-agent gateway that reads the primary replica and submits through
    the sequencer.

    Single Responsibility: Ledger-backed contract access for the cloud agent
    """

    def __init__(self, cluster: LedgerCluster, identity: str, clock=lambda: 0.0):
        self.cluster = cluster
        self.identity = identity
        self.clock = clock

    def get_intersection(self) -> List[IntersectionSet]:
        return self.cluster.contract.get_intersection()

    def get_comparison_graph(self, set_id: int) -> ComparisonGraph:
        return self.cluster.contract.get_comparison_graph(set_id)

    def submit_comparison(self, result: CompResult) -> None:
        _, rejection = self.cluster.submit_comparison(self.identity, result, self.clock())
        if rejection is not None:
            raise rejection
