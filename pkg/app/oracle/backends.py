"""
Pairwise image comparison back-ends

The vision pipeline of the processing cloud is reduced to a verdict on two
images: True when they show a difference. A real detector can implement
ComparisonOracle out of process later.
Reference: https://numpy.org/doc/stable/reference/random/bit_generators/generated/numpy.random.SeedSequence.html
"""

from abc import ABC, abstractmethod

import numpy as np

from app.oracle.schemas import ImageSample, NoisyOracleConfig, OracleSettings
from app.shared.monitoring import performance_monitor


class ComparisonOracle(ABC):
    """
    Symmetric, deterministic verdict on a pair of images.

    Single Responsibility: Comparison back-end interface
    """

    name: str = "oracle"

    @abstractmethod
    def compare(self, a: ImageSample, b: ImageSample) -> bool:
        """True when the two images disagree."""

    def __call__(self, a: ImageSample, b: ImageSample) -> bool:
        verdict = self.compare(a, b)
        performance_monitor.track_comparison(self.name, verdict)
        return verdict


class ExactOracle(ComparisonOracle):
    """Ground truth: images disagree exactly when their scene tokens differ."""

    name = "exact"

    def compare(self, a: ImageSample, b: ImageSample) -> bool:
        return a.token != b.token


class NoisyOracle(ComparisonOracle):
    """
    Ground truth flipped with probability ``beta`` (missed anomaly) or
    ``alpha`` (false alarm).

    The draw comes from a generator seeded by the run seed and the two
    digests in sorted order, so a pair always gets the same verdict whichever
    side it is passed on.

    Single Responsibility: Imperfect detection model
    """

    name = "noisy"

    def __init__(self, config: NoisyOracleConfig):
        self.config = config

    def draw(self, a: ImageSample, b: ImageSample) -> float:
        low, high = sorted((a.digest, b.digest))
        entropy = [
            self.config.seed,
            int.from_bytes(low, "little"),
            int.from_bytes(high, "little"),
        ]
        rng = np.random.default_rng(np.random.SeedSequence(entropy))
        return float(rng.random())

    def compare(self, a: ImageSample, b: ImageSample) -> bool:
        truth = a.token != b.token
        flip_rate = self.config.beta if truth else self.config.alpha
        if flip_rate == 0.0:
            return truth
        flipped = self.draw(a, b) < flip_rate
        return truth != flipped


def build_oracle(oracle_settings: OracleSettings, seed: int) -> ComparisonOracle:
    """
    Instantiate the back-end named in an experiment file.

    Single Responsibility: Oracle factory
    """
    if oracle_settings.kind == "exact":
        return ExactOracle()
    return NoisyOracle(
        NoisyOracleConfig(
            alpha=oracle_settings.alpha,
            beta=oracle_settings.beta,
            seed=seed % 2**64,
        )
    )
