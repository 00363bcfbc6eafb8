"""
Grid cell and intersection-set schemas
"""

import math
from typing import NamedTuple, Tuple

from pydantic import BaseModel, ConfigDict

from app.core.schemas import PairRecord, SetId


class CellIndex(NamedTuple):
    """
    Cell (i, j) covers [i*d, (i+2)*d) x [j*d, (j+2)*d).

    Adjacent cells overlap by d, so each point falls in four of them.
    """

    i: int
    j: int


class IntersectionSet(BaseModel):
    """
    A published group of 3f+1 mutually compatible records from distinct robots.

    Single Responsibility: Intersection set representation
    """

    model_config = ConfigDict(frozen=True)

    set_id: SetId
    members: Tuple[PairRecord, ...]
    origin_cell: CellIndex

    @property
    def robots(self) -> Tuple[int, ...]:
        return tuple(member.robot for member in self.members)

    @property
    def digests(self) -> Tuple[bytes, ...]:
        return tuple(member.digest for member in self.members)

    @property
    def centroid(self) -> Tuple[float, float]:
        count = len(self.members)
        return (
            sum(member.pose.x for member in self.members) / count,
            sum(member.pose.y for member in self.members) / count,
        )

    @property
    def mean_heading(self) -> float:
        """Circular mean of the member headings."""
        sin_sum = sum(math.sin(member.pose.theta) for member in self.members)
        cos_sum = sum(math.cos(member.pose.theta) for member in self.members)
        return math.atan2(sin_sum, cos_sum)

    def member_for(self, robot: int) -> PairRecord:
        for member in self.members:
            if member.robot == robot:
                return member
        raise KeyError(robot)
