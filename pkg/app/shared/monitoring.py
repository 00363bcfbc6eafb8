"""
Monitoring and observability setup
Reference: https://www.structlog.org/en/stable/standard-library.html
"""

import logging
import sys
import time
from contextlib import contextmanager
from typing import Any, Dict, Iterator, Optional

import structlog
from prometheus_client import Counter, Histogram, start_http_server

from app.shared.config import settings

# Prometheus metrics
CONTRACT_TRANSACTIONS = Counter(
    "contract_transactions_total",
    "Contract operations applied",
    ["op", "status"],
)

SUBMIT_PAIR_DURATION = Histogram(
    "contract_submit_pair_duration_seconds",
    "Time spent applying one submitPair",
    buckets=(0.00005, 0.0001, 0.00025, 0.0005, 0.001, 0.0025, 0.005, 0.01, 0.05),
)

INTERSECTIONS_EMITTED = Counter(
    "grid_intersection_sets_total",
    "Intersection sets published by the grid search",
)

ORACLE_COMPARISONS = Counter(
    "oracle_comparisons_total",
    "Pairwise image comparisons evaluated",
    ["backend", "verdict"],
)

REPLICA_DIGEST_CHECKS = Counter(
    "ledger_replica_digest_checks_total",
    "Replica digest agreement checks",
    ["status"],
)


def configure_logging(level: Optional[str] = None, json_output: Optional[bool] = None) -> None:
    """Configure structlog on top of the stdlib logging module."""
    level_name = (level or settings.log_level).upper()
    use_json = settings.log_json if json_output is None else json_output

    logging.basicConfig(
        level=getattr(logging, level_name, logging.INFO),
        format="%(message)s",
        stream=sys.stderr,
        force=True,
    )

    renderer: Any = (
        structlog.processors.JSONRenderer()
        if use_json
        else structlog.dev.ConsoleRenderer(colors=False)
    )
    structlog.configure(
        processors=[
            structlog.stdlib.filter_by_level,
            structlog.stdlib.add_logger_name,
            structlog.stdlib.add_log_level,
            structlog.stdlib.PositionalArgumentsFormatter(),
            structlog.processors.TimeStamper(fmt="iso"),
            structlog.processors.StackInfoRenderer(),
            structlog.processors.format_exc_info,
            structlog.processors.UnicodeDecoder(),
            renderer,
        ],
        context_class=dict,
        logger_factory=structlog.stdlib.LoggerFactory(),
        wrapper_class=structlog.stdlib.BoundLogger,
        cache_logger_on_first_use=True,
    )


def start_metrics_server(port: Optional[int] = None) -> bool:
    """Start the Prometheus exporter when a port is configured."""
    port = port if port is not None else settings.metrics_port
    if port is None:
        return False
    start_http_server(port)
    return True


class PerformanceMonitor:
    """
    Performance monitoring utilities.

    Single Responsibility: Performance measurement and tracking
    """

    @staticmethod
    @contextmanager
    def track_submit_pair() -> Iterator[None]:
        """Time one submitPair application."""
        start_time = time.perf_counter()
        try:
            yield
        finally:
            SUBMIT_PAIR_DURATION.observe(time.perf_counter() - start_time)

    @staticmethod
    def track_transaction(op: str, status: str = "accepted") -> None:
        CONTRACT_TRANSACTIONS.labels(op=op, status=status).inc()

    @staticmethod
    def track_intersections(count: int) -> None:
        if count:
            INTERSECTIONS_EMITTED.inc(count)

    @staticmethod
    def track_comparison(backend: str, anomaly: bool) -> None:
        ORACLE_COMPARISONS.labels(
            backend=backend, verdict="anomaly" if anomaly else "match"
        ).inc()

    @staticmethod
    def track_digest_check(agreed: bool) -> None:
        REPLICA_DIGEST_CHECKS.labels(status="agree" if agreed else "diverge").inc()


class ContractLogger:
    """
    Contract-specific logging utilities.

    Single Responsibility: Contract event logging
    """

    def __init__(self):
        self.logger = structlog.get_logger("app.contract")

    def log_pair_accepted(self, robot: int, digest: bytes, x: float, y: float) -> None:
        self.logger.debug(
            "pair_accepted", robot=robot, digest=digest.hex()[:12], x=x, y=y
        )

    def log_set_published(self, set_id: int, robots: Any, cell: Any) -> None:
        self.logger.info("set_published", set_id=set_id, robots=list(robots), cell=cell)

    def log_robot_flagged(self, robot: int, score: int, threshold: float) -> None:
        """Flags are what a human operator reviews, so they log at warning."""
        self.logger.warning(
            "robot_flagged", robot=robot, score=score, threshold=threshold
        )

    def log_rejection(self, op: str, caller: str, reason: str, details: Optional[Dict[str, Any]] = None) -> None:
        self.logger.info(
            "operation_rejected",
            op=op,
            caller=caller,
            reason=reason,
            details=details or {},
        )


# Global instances
performance_monitor = PerformanceMonitor()
contract_logger = ContractLogger()
