"""
Planar geometry predicates shared by the grid search and the simulator
"""

import math

from app.core.schemas import TWO_PI, PairRecord, Pose


def euclidean_distance(a: Pose, b: Pose) -> float:
    """Planar distance between two poses, ignoring heading."""
    return math.hypot(a.x - b.x, a.y - b.y)


def angular_distance(a: float, b: float) -> float:
    """Shortest angle between two headings, in [0, pi]."""
    diff = abs(a - b) % TWO_PI
    return min(diff, TWO_PI - diff)


def pair_compatible(a: PairRecord, b: PairRecord, d: float, delta: float) -> bool:
    """
    True when two records could show the same view.

    Both bounds are inclusive.
    """
    if euclidean_distance(a.pose, b.pose) > d:
        return False
    return angular_distance(a.pose.theta, b.pose.theta) <= delta
