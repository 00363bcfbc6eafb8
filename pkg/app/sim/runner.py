"""
Discrete-event experiment loop

Robots capture images on a virtual clock. Each image is joined to the
nearest pose sample, stored with the processing cloud and submitted to the
ledger as a pair. After every batch of images sharing a timestamp the cloud
agent compares whatever sets became pending. No wall-clock time is read, so a
run is a pure function of its configuration and seed.
Reference: https://docs.python.org/3/library/heapq.html
"""

import heapq
import math
from typing import Dict, List, Optional, Tuple

import structlog

from app.contract.service import robot_identity
from app.ledger.codec import state_digest
from app.ledger.service import LedgerCluster, LedgerGateway
from app.oracle.agent import CloudAgent
from app.oracle.backends import build_oracle
from app.oracle.storage import ImageStorage
from app.shared.config import settings
from app.shared.exceptions import StalePoseError, ValidationError
from app.sim.report import (
    IntersectionRow,
    RunReport,
    RunStats,
    ScoreRow,
    TrajectoryRow,
    VerdictRow,
)
from app.sim.scene import RobotCamera, SceneModel
from app.sim.schemas import ExperimentConfig
from app.sim.trajectory import PoseStream

logger = structlog.get_logger(__name__)

ImageEvent = Tuple[float, int]


class ExperimentRunner:
    """
    Runs one experiment end to end.

    With ``verify_replicas`` every robot and the cloud hold a replica and
    their digests are compared after each transaction; without it a single
    replica is kept, which is what Monte Carlo sweeps want.

    Single Responsibility: Experiment orchestration
    """

    def __init__(
        self,
        config: ExperimentConfig,
        verify_replicas: bool = True,
        oracle_workers: Optional[int] = None,
    ):
        self.config = config
        self.cloud = settings.cloud_identity
        contract = config.contract
        node_ids = [self.cloud]
        if verify_replicas:
            node_ids += [robot_identity(robot) for robot in range(contract.n)]
        self.cluster = LedgerCluster(node_ids, verify=verify_replicas)

        self.storage = ImageStorage()
        self.agent = CloudAgent(
            build_oracle(config.oracle, config.seed), self.storage, workers=oracle_workers
        )
        self.scene = SceneModel(config.scene, contract.d, config.seed)
        self.cameras: Dict[int, RobotCamera] = {
            robot.id: RobotCamera(robot.id, robot.behavior, config.seed)
            for robot in config.ordered_robots
        }
        self.streams: Dict[int, PoseStream] = {}
        self.now = 0.0
        self.stats = RunStats()
        self.timeline: List[ScoreRow] = []

    def run(self) -> RunReport:
        """
        Execute the event loop and assemble the report.

        Single Responsibility: Experiment execution
        """
        config = self.config
        logger.info(
            "experiment_started",
            name=config.name,
            seed=config.seed,
            robots=len(config.robots),
            oracle=config.oracle.kind,
        )
        self.cluster.deploy(self.cloud, config.contract, self.cloud, ts=0.0)
        gateway = LedgerGateway(self.cluster, self.cloud, clock=lambda: self.now)

        events = self._schedule_images()
        self._record_scores(0.0)
        last_snapshot = self._snapshot()
        while events:
            self.now = events[0][0]
            batch: List[int] = []
            while events and events[0][0] == self.now:
                batch.append(heapq.heappop(events)[1])
            for robot in batch:
                self._capture_and_submit(robot, self.now)
            self.agent.step(gateway)
            snapshot = self._snapshot()
            if snapshot != last_snapshot:
                self._record_scores(self.now)
                last_snapshot = snapshot

        report = self._build_report()
        logger.info(
            "experiment_completed",
            name=config.name,
            sets=report.stats.sets_published,
            completed=report.stats.completed_sets,
            flagged=list(report.flagged_robots),
        )
        return report

    def _schedule_images(self) -> List[ImageEvent]:
        rates = self.config.rates
        events: List[ImageEvent] = []
        for robot in self.config.ordered_robots:
            plan = robot.trajectory
            active_until = min(plan.end_time, self.config.duration)
            try:
                self.streams[robot.id] = PoseStream.sample(plan, rates.pose_hz, active_until)
            except ValidationError:
                logger.warning("robot_never_active", robot=robot.id, start=plan.start_time)
                continue
            first = math.ceil(plan.start_time * rates.image_hz)
            last = math.floor(active_until * rates.image_hz)
            for tick in range(first, last + 1):
                events.append((tick / rates.image_hz, robot.id))
        heapq.heapify(events)
        return events

    def _capture_and_submit(self, robot: int, t: float) -> None:
        try:
            pose = self.streams[robot].nearest(t, settings.staleness_bound)
        except StalePoseError as exc:
            self.stats.images_dropped += 1
            logger.info("image_dropped", robot=robot, time=t, reason=exc.message)
            return
        pair, token, altered = self.cameras[robot].capture(self.scene, pose, t)
        if altered:
            self.stats.images_altered += 1
        self.storage.put(pair.digest, token)
        _, rejection = self.cluster.submit_pair(robot_identity(robot), pair, ts=t)
        if rejection is not None:
            logger.warning("pair_rejected", robot=robot, time=t, error=rejection.message)

    def _snapshot(self) -> Tuple[Tuple[int, ...], int]:
        state = self.cluster.contract.state
        return tuple(state.scores), state.completed_sets

    def _record_scores(self, t: float) -> None:
        contract = self.cluster.contract
        threshold = contract.threshold()
        for robot, score in enumerate(contract.state.scores):
            self.timeline.append(ScoreRow(time=t, robot=robot, score=score, threshold=threshold))

    def _build_report(self) -> RunReport:
        contract = self.cluster.contract
        state = contract.state

        published_at: Dict[str, float] = {}
        flagged_at: Dict[str, float] = {}
        for event in state.audit:
            if event.kind == "set_published":
                published_at.setdefault(event.subject, event.timestamp)
            elif event.kind == "robot_flagged":
                flagged_at.setdefault(event.subject, event.timestamp)
            elif event.kind == "pair_accepted":
                self.stats.pairs_submitted += 1
            elif event.kind == "rejected":
                self.stats.rejections += 1

        intersections = []
        for intersection in state.intersections:
            x, y = intersection.centroid
            intersections.append(
                IntersectionRow(
                    set_id=intersection.set_id,
                    x=x,
                    y=y,
                    heading=intersection.mean_heading,
                    robots=list(intersection.robots),
                    digests=[digest.hex() for digest in intersection.digests],
                    published_at=published_at.get(str(intersection.set_id), 0.0),
                )
            )

        verdicts = [
            VerdictRow(
                robot=robot,
                flagged=flag,
                flag_time=flagged_at.get(str(robot)),
                score=state.scores[robot],
            )
            for robot, flag in enumerate(state.byz_flags)
        ]

        self.stats.sets_published = len(state.intersections)
        self.stats.completed_sets = state.completed_sets
        self.stats.ledger_entries = len(self.cluster.log)

        return RunReport(
            name=self.config.name,
            seed=self.config.seed,
            config=self.config.model_dump(mode="json"),
            score_timeline=self.timeline,
            intersections=intersections,
            verdicts=verdicts,
            trajectories=self._trajectory_rows(),
            final_scores=list(state.scores),
            final_threshold=contract.threshold(),
            final_digest=state_digest(state).hex(),
            digest_trail=[digest.hex() for digest in self.cluster.digest_trail],
            stats=self.stats,
            ledger=list(self.cluster.log),
        )

    def _trajectory_rows(self) -> List[TrajectoryRow]:
        stride = max(1, settings.trajectory_stride)
        rows = []
        for robot, stream in sorted(self.streams.items()):
            for index in range(0, len(stream), stride):
                pose = stream.row(index)
                rows.append(
                    TrajectoryRow(
                        time=float(stream.times[index]),
                        robot=robot,
                        x=pose.x,
                        y=pose.y,
                        theta=pose.theta,
                    )
                )
        return rows


def run_experiment(config: ExperimentConfig, verify_replicas: bool = True) -> RunReport:
    """Run ``config`` once and return its report."""
    return ExperimentRunner(config, verify_replicas=verify_replicas).run()
