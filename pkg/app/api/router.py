"""
Contract and ledger endpoints of a node
Reference: https://fastapi.tiangolo.com/tutorial/bigger-applications/
"""

from typing import Annotated, List

from fastapi import APIRouter, Depends, Header

from app.api.node import ContractNode, get_node
from app.api.schemas import (
    ComparisonSubmission,
    DigestResponse,
    EdgeState,
    GraphResponse,
    RobotStateResponse,
    ScoresResponse,
    SubmissionResponse,
)
from app.contract.schemas import CompResult
from app.core.schemas import PairRecord
from app.grid.schemas import IntersectionSet
from app.ledger.codec import state_digest

contract_router = APIRouter()
ledger_router = APIRouter()

Caller = Annotated[str, Header(alias="X-Caller", min_length=1)]
Node = Annotated[ContractNode, Depends(get_node)]


@contract_router.post("/pairs", response_model=SubmissionResponse)
async def submit_pair(pair: PairRecord, caller: Caller, node: Node):
    """
    Order a robot's pair submission and apply it.

    Single Responsibility: Pair submission endpoint
    """
    seq, published = node.submit_pair(caller, pair)
    return SubmissionResponse(seq=seq, published_sets=published)


@contract_router.post("/comparisons", response_model=SubmissionResponse)
async def submit_comparison(submission: ComparisonSubmission, caller: Caller, node: Node):
    """
    Order a comparison result from the processing cloud and apply it.

    Single Responsibility: Comparison submission endpoint
    """
    result = CompResult(**submission.model_dump(exclude={"ts"}))
    seq, flagged = node.submit_comparison(caller, result, submission.ts)
    return SubmissionResponse(seq=seq, flagged_robots=flagged)


@contract_router.get("/intersections", response_model=List[IntersectionSet])
async def get_intersections(node: Node):
    """Sets still waiting for comparisons."""
    return node.contract.get_intersection()


@contract_router.get("/intersections/{set_id}/graph", response_model=GraphResponse)
async def get_comparison_graph(set_id: int, node: Node):
    graph = node.contract.get_comparison_graph(set_id)
    return GraphResponse(
        set_id=graph.set_id,
        vertices=list(graph.vertices),
        edges=[
            EdgeState(robot_a=edge[0], robot_b=edge[1], anomaly=value)
            for edge, value in graph.edges.items()
        ],
        complete=graph.complete,
    )


@contract_router.get("/robots/{robot}", response_model=RobotStateResponse)
async def get_robot_state(robot: int, node: Node):
    byzantine = node.contract.get_robot_state(robot)
    return RobotStateResponse(
        robot=robot, byzantine=byzantine, score=node.contract.state.scores[robot]
    )


@contract_router.get("/scores", response_model=ScoresResponse)
async def get_scores(node: Node):
    state = node.contract.state
    return ScoresResponse(
        scores=list(state.scores),
        threshold=node.contract.threshold(),
        completed_sets=state.completed_sets,
        flags=list(state.byz_flags),
    )


@ledger_router.get("/digest", response_model=DigestResponse)
async def get_digest(node: Node):
    """
    Replica digest at the last applied sequence number.

    Single Responsibility: Replica agreement check
    """
    return DigestResponse(
        applied_seq=node.replica.applied_seq,
        digest=state_digest(node.contract.state).hex(),
    )
