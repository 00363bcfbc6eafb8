"""
Waypoint trajectories, pose streams and image/pose time association

Positions are interpolated with numpy over the cumulative path length; every
caller, scalar or batched, goes through the same vectorized routine so equal
arc lengths always produce bit-identical poses.
Reference: https://numpy.org/doc/stable/reference/generated/numpy.searchsorted.html
"""

import math
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from app.core.schemas import Pose
from app.shared.config import settings
from app.shared.exceptions import StalePoseError, ValidationError
from app.sim.schemas import TrajectoryPlan


class PathGeometry:
    """
    Polyline with zero-length segments removed and per-segment headings.

    Single Responsibility: Arc-length parameterization of a route
    """

    def __init__(self, plan: TrajectoryPlan):
        points = np.array([(w.x, w.y) for w in plan.waypoints], dtype=float)
        deltas = np.diff(points, axis=0)
        lengths = np.hypot(deltas[:, 0], deltas[:, 1])
        keep = lengths > 0.0
        self.starts = points[:-1][keep]
        self.deltas = deltas[keep]
        self.lengths = lengths[keep]
        self.cumulative = np.concatenate(([0.0], np.cumsum(self.lengths)))
        self.headings = np.arctan2(self.deltas[:, 1], self.deltas[:, 0])
        self.total = float(self.cumulative[-1])
        self.end = points[-1]

    def positions(self, arc: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """x, y and heading at each arc length; clamped to the final waypoint."""
        arc = np.asarray(arc, dtype=float)
        segment = np.searchsorted(self.cumulative, arc, side="right") - 1
        segment = np.clip(segment, 0, len(self.lengths) - 1)
        fraction = (arc - self.cumulative[segment]) / self.lengths[segment]
        x = self.starts[segment, 0] + fraction * self.deltas[segment, 0]
        y = self.starts[segment, 1] + fraction * self.deltas[segment, 1]
        beyond = arc >= self.total
        x = np.where(beyond, self.end[0], x)
        y = np.where(beyond, self.end[1], y)
        return x, y, self.headings[segment]


def _arc_lengths(plan: TrajectoryPlan, times: np.ndarray) -> np.ndarray:
    return plan.speed * (times - plan.start_time)


def pose_at(plan: TrajectoryPlan, t: float, geometry: Optional[PathGeometry] = None) -> Pose:
    """
    Pose of a robot following ``plan`` at time ``t``.

    Single Responsibility: Trajectory interpolation
    """
    if not math.isfinite(t) or t < plan.start_time:
        raise ValidationError(f"t={t} is before the trajectory start {plan.start_time}")
    geometry = geometry or PathGeometry(plan)
    x, y, theta = geometry.positions(_arc_lengths(plan, np.array([t])))
    return Pose(x=float(x[0]), y=float(y[0]), theta=float(theta[0]))


class PoseStream:
    """
    Time-sorted pose samples as published by a robot's localization.

    Single Responsibility: Pose sample storage and nearest lookup
    """

    def __init__(self, times: np.ndarray, poses: np.ndarray):
        if len(times) == 0:
            raise ValidationError("pose stream is empty")
        if len(times) != len(poses):
            raise ValidationError("pose stream times and poses differ in length")
        if np.any(np.diff(times) < 0):
            raise ValidationError("pose stream is not sorted by time")
        self.times = np.asarray(times, dtype=float)
        self.poses = np.asarray(poses, dtype=float)

    @classmethod
    def from_samples(cls, samples: Sequence[Tuple[float, Pose]]) -> "PoseStream":
        times = np.array([t for t, _ in samples], dtype=float)
        poses = np.array([(p.x, p.y, p.theta) for _, p in samples], dtype=float).reshape(-1, 3)
        return cls(times, poses)

    @classmethod
    def sample(cls, plan: TrajectoryPlan, rate_hz: float, until: float) -> "PoseStream":
        """
        Poses at every multiple of ``1 / rate_hz`` between the plan start and
        ``until``.
        """
        first = math.ceil(plan.start_time * rate_hz)
        last = math.floor(until * rate_hz)
        if last < first:
            raise ValidationError(
                f"no pose sample between t={plan.start_time} and t={until}"
            )
        times = np.arange(first, last + 1, dtype=float) / rate_hz
        # guard against a tick rounding just below the start time
        times = np.maximum(times, plan.start_time)
        geometry = PathGeometry(plan)
        x, y, theta = geometry.positions(_arc_lengths(plan, times))
        return cls(times, np.column_stack((x, y, theta)))

    def __len__(self) -> int:
        return len(self.times)

    def row(self, index: int) -> Pose:
        x, y, theta = self.poses[index]
        return Pose(x=float(x), y=float(y), theta=float(theta))

    def nearest(self, image_t: float, staleness_bound: float) -> Pose:
        """
        Sample closest in time to ``image_t``; ties go to the earlier sample.

        Single Responsibility: Image/pose synchronization
        """
        index = int(np.searchsorted(self.times, image_t, side="left"))
        candidates = [i for i in (index - 1, index) if 0 <= i < len(self.times)]
        best = min(candidates, key=lambda i: (abs(self.times[i] - image_t), i))
        gap = abs(float(self.times[best]) - image_t)
        if gap > staleness_bound:
            raise StalePoseError(
                f"nearest pose is {gap:.3f} s from image at t={image_t} "
                f"(bound {staleness_bound} s)"
            )
        return self.row(best)


def associate_pose(
    image_t: float,
    pose_stream: Union[PoseStream, Sequence[Tuple[float, Pose]]],
    staleness_bound: Optional[float] = None,
) -> Pose:
    """Attach the nearest-in-time pose to an image timestamp."""
    stream = pose_stream if isinstance(pose_stream, PoseStream) else PoseStream.from_samples(pose_stream)
    bound = settings.staleness_bound if staleness_bound is None else staleness_bound
    return stream.nearest(image_t, bound)
