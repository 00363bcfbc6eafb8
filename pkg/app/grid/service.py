"""
Overlapping-cell intersection search

The map is split into 2d x 2d cells overlapping by d. Any group of records
with pairwise distance <= d shares at least one cell, so an exhaustive search
inside each cell finds every qualifying group without scanning all locations.
"""

import math
from collections import defaultdict
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

import structlog

from app.core.geometry import angular_distance, euclidean_distance, pair_compatible
from app.core.schemas import PairRecord
from app.grid.schemas import CellIndex, IntersectionSet
from app.shared.config import settings
from app.shared.exceptions import DuplicateSubmissionError, ValidationError

logger = structlog.get_logger(__name__)


def cells_for_position(x: float, y: float, d: float) -> List[CellIndex]:
    """
    The four cells whose extent contains (x, y), in ascending order.

    Single Responsibility: Point to cell assignment
    """
    if not (math.isfinite(x) and math.isfinite(y)):
        raise ValidationError(f"position ({x}, {y}) is not finite")
    if not (math.isfinite(d) and d > 0):
        raise ValidationError(f"cell spacing d={d} must be positive")
    a = math.floor(x / d)
    b = math.floor(y / d)
    return [
        CellIndex(a - 1, b - 1),
        CellIndex(a - 1, b),
        CellIndex(a, b - 1),
        CellIndex(a, b),
    ]


def shared_cells(records: Iterable[PairRecord], d: float) -> Set[CellIndex]:
    """Cells every record in ``records`` is assigned to."""
    common: Optional[Set[CellIndex]] = None
    for record in records:
        cells = set(cells_for_position(record.pose.x, record.pose.y, d))
        common = cells if common is None else common & cells
    return common or set()


def _tie_break_key(members: Sequence[PairRecord], max_distance: float) -> tuple:
    # members are ordered by robot, so the last component is lexicographic (robot, digest)
    return (
        max_distance,
        sum(member.time for member in members),
        tuple(member.sort_key for member in members),
    )


def find_candidate_set(
    cell: Sequence[PairRecord], f: int, d: float, delta: float
) -> Optional[List[PairRecord]]:
    """
    Exhaustive search for the canonical qualifying set inside one cell.

    A qualifying set has 3f+1 records from distinct robots, all pairwise
    compatible. Among several, the one with the smallest maximum pairwise
    distance wins, then the smallest timestamp sum, then lexicographic
    (robot, digest). Branch and bound prunes partial sets whose spread
    already exceeds the best complete one.

    Single Responsibility: Per-cell candidate selection
    """
    size = 3 * f + 1
    by_robot: Dict[int, List[PairRecord]] = defaultdict(list)
    for record in cell:
        by_robot[record.robot].append(record)
    if len(by_robot) < size:
        return None

    robots = sorted(by_robot)
    buckets = [sorted(by_robot[robot], key=lambda r: r.digest) for robot in robots]
    best_members: Optional[List[PairRecord]] = None
    best_key: Optional[tuple] = None
    chosen: List[PairRecord] = []

    def search(start: int, spread: float) -> None:
        nonlocal best_members, best_key
        if len(chosen) == size:
            key = _tie_break_key(chosen, spread)
            if best_key is None or key < best_key:
                best_key = key
                best_members = list(chosen)
            return
        needed = size - len(chosen)
        for index in range(start, len(buckets) - needed + 1):
            for record in buckets[index]:
                new_spread = spread
                compatible = True
                for other in chosen:
                    distance = euclidean_distance(record.pose, other.pose)
                    if distance > d or angular_distance(record.pose.theta, other.pose.theta) > delta:
                        compatible = False
                        break
                    if distance > new_spread:
                        new_spread = distance
                if not compatible:
                    continue
                if best_key is not None and new_spread > best_key[0]:
                    continue
                chosen.append(record)
                search(index + 1, new_spread)
                chosen.pop()

    search(0, 0.0)
    return best_members


def brute_force_find_sets(
    records: Sequence[PairRecord],
    f: int,
    d: float,
    delta: float,
    limit: Optional[int] = None,
) -> List[Tuple[PairRecord, ...]]:
    """
    Every qualifying set by direct enumeration, with no grid involved.

    Used as a test oracle for the cell search. Sets are returned with members
    ordered by robot, sorted lexicographically by (robot, digest).
    """
    limit = settings.brute_force_limit if limit is None else limit
    if len(records) > limit:
        raise ValidationError(
            f"brute-force search is limited to {limit} records, got {len(records)}"
        )
    size = 3 * f + 1
    ordered = sorted(records, key=lambda r: r.sort_key)
    found: List[Tuple[PairRecord, ...]] = []

    def extend(start: int, chosen: List[PairRecord]) -> None:
        if len(chosen) == size:
            found.append(tuple(chosen))
            return
        for index in range(start, len(ordered)):
            candidate = ordered[index]
            if any(other.robot == candidate.robot for other in chosen):
                continue
            if all(pair_compatible(candidate, other, d, delta) for other in chosen):
                chosen.append(candidate)
                extend(index + 1, chosen)
                chosen.pop()

    extend(0, [])
    found.sort(key=lambda members: tuple(member.sort_key for member in members))
    return found


class SpatialGrid:
    """
    Records indexed by overlapping cells, with consumption bookkeeping.

    Each digest is used in at most one published set and each cell publishes
    at most one set. Consumption also keeps a group reachable from several
    overlapping cells from being published more than once. Only cells touched
    since the previous scan are searched.

    Single Responsibility: Incremental intersection discovery
    """

    def __init__(self, d: float):
        self.d = d
        self.records: Dict[bytes, PairRecord] = {}
        self.cells: Dict[CellIndex, List[bytes]] = defaultdict(list)
        self.consumed: Set[bytes] = set()
        self.emitted_cells: Set[CellIndex] = set()
        self.touched: Set[CellIndex] = set()
        self.next_set_id = 0

    def __contains__(self, digest: bytes) -> bool:
        return digest in self.records

    def __len__(self) -> int:
        return len(self.records)

    def check_insertable(self, record: PairRecord) -> List[CellIndex]:
        """Validate a record without mutating the grid; returns its cells."""
        if record.digest in self.records:
            raise DuplicateSubmissionError(
                f"digest {record.digest.hex()[:12]} was already submitted"
            )
        return cells_for_position(record.pose.x, record.pose.y, self.d)

    def insert_pair(self, record: PairRecord) -> List[CellIndex]:
        """
        Reference a record from its four cells.

        Single Responsibility: Record insertion
        """
        cells = self.check_insertable(record)
        self.records[record.digest] = record
        for cell in cells:
            self.cells[cell].append(record.digest)
            self.touched.add(cell)
        return cells

    def cell_records(self, cell: CellIndex) -> List[PairRecord]:
        """Unconsumed records referenced by a cell, in insertion order."""
        return [
            self.records[digest]
            for digest in self.cells.get(cell, ())
            if digest not in self.consumed
        ]

    def find_intersections(self, f: int, delta: float) -> List[IntersectionSet]:
        """
        Scan touched cells in ascending order and publish new sets.

        Single Responsibility: Intersection set emission
        """
        published: List[IntersectionSet] = []
        for cell in sorted(self.touched):
            if cell in self.emitted_cells:
                continue
            members = find_candidate_set(self.cell_records(cell), f, self.d, delta)
            if members is None:
                continue
            intersection = IntersectionSet(
                set_id=self.next_set_id,
                members=tuple(members),
                origin_cell=cell,
            )
            self.next_set_id += 1
            self.emitted_cells.add(cell)
            self.consumed.update(member.digest for member in members)
            published.append(intersection)
            logger.debug(
                "intersection_found",
                set_id=intersection.set_id,
                cell=tuple(cell),
                robots=list(intersection.robots),
            )
        self.touched.clear()
        return published


def scan_all(records: Iterable[PairRecord], f: int, d: float, delta: float) -> Tuple[SpatialGrid, List[IntersectionSet]]:
    """Insert records one by one, scanning after each, as the contract does."""
    grid = SpatialGrid(d)
    published: List[IntersectionSet] = []
    for record in records:
        grid.insert_pair(record)
        published.extend(grid.find_intersections(f, delta))
    return grid, published
