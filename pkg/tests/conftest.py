"""
Pytest configuration and fixtures for testing
Reference: https://docs.pytest.org/en/stable/how-to/fixtures.html
"""

from pathlib import Path
from typing import AsyncGenerator, Callable

import pytest
from httpx import ASGITransport, AsyncClient

from app.api.node import ContractNode, get_node
from app.contract.service import DetectionContract, robot_identity
from app.core.schemas import ContractConfig, PairRecord
from app.main import app
from app.shared.monitoring import configure_logging
from app.sim.report import RunReport
from app.sim.runner import run_experiment
from app.sim.schemas import ExperimentConfig, load_experiment
from tests.factories import co_located_group, make_pair

CONFIGS_DIR = Path(__file__).resolve().parents[1] / "configs"


@pytest.fixture(scope="session", autouse=True)
def quiet_logging() -> None:
    configure_logging(level="WARNING", json_output=False)


@pytest.fixture
def pair_factory() -> Callable[..., PairRecord]:
    return make_pair


@pytest.fixture
def field_config() -> ContractConfig:
    """Four-robot trial parameters with the plotted-data multiplier m=1.33."""
    return ContractConfig.plotted_preset()


@pytest.fixture
def contract(field_config) -> DetectionContract:
    """
    Fresh contract with f=1, n=4, d=0.5, delta=0.4, m=1.33.

    Single Responsibility: Test contract creation
    """
    return DetectionContract.from_config(field_config, "cloud")


@pytest.fixture
def published_contract(contract) -> DetectionContract:
    """Contract holding one published, uncompared set of robots 0..3."""
    for pair in co_located_group(1.0, 1.0):
        contract.submit_pair(robot_identity(pair.robot), pair)
    return contract


@pytest.fixture(scope="session")
def byzantine_config() -> ExperimentConfig:
    return load_experiment(CONFIGS_DIR / "patrol_byzantine.yaml")


@pytest.fixture(scope="session")
def honest_config() -> ExperimentConfig:
    return load_experiment(CONFIGS_DIR / "patrol_honest.yaml")


@pytest.fixture(scope="session")
def noisy_config() -> ExperimentConfig:
    return load_experiment(CONFIGS_DIR / "patrol_noisy.yaml")


@pytest.fixture(scope="session")
def byzantine_report(byzantine_config) -> RunReport:
    """
    Perfect-oracle patrol run with replica verification on.

    Single Responsibility: Shared end-to-end run
    """
    return run_experiment(byzantine_config)


@pytest.fixture
def node(field_config) -> ContractNode:
    return ContractNode(field_config, cloud_identity="cloud")


@pytest.fixture
async def client(node) -> AsyncGenerator[AsyncClient, None]:
    """
    Create test HTTP client bound to a fresh node.

    Single Responsibility: Test client creation
    """
    app.dependency_overrides[get_node] = lambda: node

    async with AsyncClient(transport=ASGITransport(app=app), base_url="http://test") as client:
        yield client

    app.dependency_overrides.clear()
