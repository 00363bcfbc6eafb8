"""
Record builders shared by the test modules
"""

from hashlib import sha256
from typing import List

from app.core.schemas import PairRecord, Pose


def digest_of(*parts: object) -> bytes:
    """Deterministic 32-byte digest for test records."""
    return sha256("|".join(str(part) for part in parts).encode()).digest()


def make_pair(
    robot: int,
    x: float = 1.0,
    y: float = 1.0,
    theta: float = 0.0,
    time: float = 0.0,
    label: str = "",
) -> PairRecord:
    return PairRecord(
        robot=robot,
        digest=digest_of(robot, x, y, theta, time, label),
        pose=Pose(x=x, y=y, theta=theta),
        time=time,
    )


def co_located_group(x: float, y: float, robots: int = 4, time: float = 0.0) -> List[PairRecord]:
    return [make_pair(robot, x=x, y=y, time=time) for robot in range(robots)]
