"""
Scene model and robot camera behavior

Image content is summarized by a scene token. The token depends on the
scene seed and on the set of changes visible from the robot's position cell
at capture time. Heading does not enter the token.
"""

import math
import struct
from hashlib import sha256
from typing import List, Tuple

import numpy as np

from app.core.schemas import PairRecord, Pose
from app.sim.schemas import AgentBehavior, SceneSettings

PositionCell = Tuple[int, int]


class SceneModel:
    """
    Ground-truth content of the arena over time.

    Positions are quantized at ``d / 2`` and the centre of the cell decides
    which regional changes are in view. Global changes and the unchanged
    scene give every pose the same token. Two compatible poses in different
    cells can still disagree on a regional change whose boundary passes
    between the two cell centres.

    Single Responsibility: Scene token generation
    """

    def __init__(self, scene: SceneSettings, d: float, seed: int):
        self.scene = scene
        self.position_step = d / 2.0
        self.seed = seed
        self.changes = sorted(scene.changes, key=lambda change: (change.time, change.label))

    def cell(self, pose: Pose) -> PositionCell:
        return (
            math.floor(pose.x / self.position_step),
            math.floor(pose.y / self.position_step),
        )

    def epoch(self, t: float) -> int:
        """Number of scene changes that happened up to ``t``."""
        return sum(1 for change in self.changes if change.time <= t)

    def visible_changes(self, pose: Pose, t: float) -> List[str]:
        qx, qy = self.cell(pose)
        center_x = (qx + 0.5) * self.position_step
        center_y = (qy + 0.5) * self.position_step
        visible = []
        for change in self.changes:
            if change.time > t:
                continue
            if change.center is not None and change.radius is not None:
                distance = math.hypot(center_x - change.center[0], center_y - change.center[1])
                if distance > change.radius:
                    continue
            visible.append(change.label)
        return visible

    def token(self, pose: Pose, t: float) -> bytes:
        hasher = sha256(b"scene")
        hasher.update(struct.pack("<Q", self.seed))
        for label in self.visible_changes(pose, t):
            hasher.update(label.encode("utf-8"))
            hasher.update(b"\x00")
        return hasher.digest()


def image_digest(robot: int, t: float, token: bytes) -> bytes:
    """Digest of the image a robot captured at time ``t``."""
    return sha256(b"image" + struct.pack("<Id", robot, t) + token).digest()


class RobotCamera:
    """
    Captures images for one robot, altering them when the robot is byzantine.

    Single Responsibility: Honest and byzantine image capture
    """

    def __init__(self, robot: int, behavior: AgentBehavior, seed: int):
        self.robot = robot
        self.behavior = behavior
        self._rng = np.random.default_rng(np.random.SeedSequence([seed, robot]))

    def should_alter(self, pose: Pose) -> bool:
        if not self.behavior.byzantine:
            return False
        if self.behavior.policy == "always":
            return True
        if self.behavior.policy == "probability":
            return bool(self._rng.random() < self.behavior.probability)
        center = self.behavior.region_center
        radius = self.behavior.region_radius
        return math.hypot(pose.x - center[0], pose.y - center[1]) <= radius  # type: ignore[index,operator]

    def capture(self, scene: SceneModel, pose: Pose, t: float) -> Tuple[PairRecord, bytes, bool]:
        """Returns the submitted pair, the stored token and whether it was altered."""
        token = scene.token(pose, t)
        altered = self.should_alter(pose)
        if altered:
            token = sha256(b"altered" + token + struct.pack("<Id", self.robot, t)).digest()
        digest = image_digest(self.robot, t, token)
        pair = PairRecord(robot=self.robot, digest=digest, pose=pose, time=t)
        return pair, token, altered
