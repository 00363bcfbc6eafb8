"""
Node API tests
"""

from httpx import AsyncClient

import app.main as main_module
from tests.factories import co_located_group, make_pair

EDGES = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]


def pair_body(pair) -> dict:
    return pair.model_dump(mode="json")


async def publish_group(client: AsyncClient) -> list:
    responses = []
    for pair in co_located_group(1.0, 1.0):
        responses.append(
            await client.post(
                "/api/v1/contract/pairs",
                json=pair_body(pair),
                headers={"X-Caller": f"robot-{pair.robot}"},
            )
        )
    return responses


class TestNodeApi:
    """
    Test suite for the contract endpoints.

    Single Responsibility: Node HTTP interface testing
    """

    async def test_health(self, client: AsyncClient):
        response = await client.get("/health")
        assert response.status_code == 200
        assert response.json()["status"] == "healthy"

    async def test_fourth_pair_publishes_set(self, client: AsyncClient):
        responses = await publish_group(client)

        assert all(response.status_code == 200 for response in responses)
        assert [response.json()["seq"] for response in responses] == [1, 2, 3, 4]
        assert responses[-1].json()["published_sets"] == [0]

        pending = (await client.get("/api/v1/contract/intersections")).json()
        assert len(pending) == 1
        assert [member["robot"] for member in pending[0]["members"]] == [0, 1, 2, 3]

    async def test_comparisons_flag_robot(self, client: AsyncClient):
        await publish_group(client)

        flagged = []
        for a, b in EDGES:
            response = await client.post(
                "/api/v1/contract/comparisons",
                json={"set_id": 0, "robot_a": a, "robot_b": b, "anomaly": 0 in (a, b), "ts": 7.0},
                headers={"X-Caller": "cloud"},
            )
            assert response.status_code == 200
            flagged += response.json()["flagged_robots"]
        assert flagged == [0]

        scores = (await client.get("/api/v1/contract/scores")).json()
        assert scores["scores"] == [3, 1, 1, 1]
        assert scores["completed_sets"] == 1
        assert scores["flags"] == [True, False, False, False]

        robot = (await client.get("/api/v1/contract/robots/0")).json()
        assert robot == {"robot": 0, "byzantine": True, "score": 3}

        graph = (await client.get("/api/v1/contract/intersections/0/graph")).json()
        assert graph["complete"] is True
        assert len(graph["edges"]) == 6
        assert (await client.get("/api/v1/contract/intersections")).json() == []

    async def test_wrong_caller_is_forbidden(self, client: AsyncClient):
        response = await client.post(
            "/api/v1/contract/pairs", json=pair_body(make_pair(0)), headers={"X-Caller": "robot-1"}
        )
        assert response.status_code == 403
        assert response.json()["type"] == "AuthorizationError"

    async def test_only_cloud_submits_comparisons(self, client: AsyncClient):
        await publish_group(client)
        response = await client.post(
            "/api/v1/contract/comparisons",
            json={"set_id": 0, "robot_a": 0, "robot_b": 1, "anomaly": True},
            headers={"X-Caller": "robot-0"},
        )
        assert response.status_code == 403

    async def test_duplicate_digest_conflicts(self, client: AsyncClient):
        headers = {"X-Caller": "robot-0"}
        await client.post("/api/v1/contract/pairs", json=pair_body(make_pair(0)), headers=headers)
        response = await client.post(
            "/api/v1/contract/pairs", json=pair_body(make_pair(0)), headers=headers
        )
        assert response.status_code == 409
        assert "already submitted" in response.json()["detail"]

    async def test_unknown_robot_and_set(self, client: AsyncClient):
        assert (await client.get("/api/v1/contract/robots/9")).status_code == 404
        assert (await client.get("/api/v1/contract/intersections/5/graph")).status_code == 404

    async def test_robot_outside_contract(self, client: AsyncClient):
        response = await client.post(
            "/api/v1/contract/pairs", json=pair_body(make_pair(9)), headers={"X-Caller": "robot-9"}
        )
        assert response.status_code == 400

    async def test_malformed_requests(self, client: AsyncClient):
        missing_header = await client.post("/api/v1/contract/pairs", json=pair_body(make_pair(0)))
        assert missing_header.status_code == 422

        body = pair_body(make_pair(0))
        body["digest"] = "abcd"
        short_digest = await client.post(
            "/api/v1/contract/pairs", json=body, headers={"X-Caller": "robot-0"}
        )
        assert short_digest.status_code == 422

    async def test_robot_id_beyond_u32(self, client: AsyncClient):
        body = pair_body(make_pair(0))
        body["robot"] = 2**32
        response = await client.post(
            "/api/v1/contract/pairs", json=body, headers={"X-Caller": f"robot-{2**32}"}
        )
        assert response.status_code == 422


class TestLedgerApi:
    """Test suite for the replica digest endpoint."""

    async def test_digest_tracks_applied_entries(self, client: AsyncClient, node):
        fresh = (await client.get("/api/v1/ledger/digest")).json()
        assert fresh["applied_seq"] == 0

        await publish_group(client)
        after = (await client.get("/api/v1/ledger/digest")).json()
        assert after["applied_seq"] == 4
        assert after["digest"] != fresh["digest"]
        assert after["digest"] == node.replica.digest().hex()

    async def test_rejection_still_advances_sequence(self, client: AsyncClient):
        headers = {"X-Caller": "robot-0"}
        await client.post("/api/v1/contract/pairs", json=pair_body(make_pair(0)), headers=headers)
        await client.post("/api/v1/contract/pairs", json=pair_body(make_pair(0)), headers=headers)
        digest = (await client.get("/api/v1/ledger/digest")).json()
        assert digest["applied_seq"] == 2


class TestLifespan:
    """Test suite for node startup."""

    async def test_startup_starts_metrics_exporter(self, monkeypatch, node):
        started = []

        def fake_exporter() -> bool:
            started.append(True)
            return True

        monkeypatch.setattr(main_module, "configure_logging", lambda: None)
        monkeypatch.setattr(main_module, "get_node", lambda: node)
        monkeypatch.setattr(main_module, "start_metrics_server", fake_exporter)

        async with main_module.lifespan(main_module.app):
            assert started == [True]
