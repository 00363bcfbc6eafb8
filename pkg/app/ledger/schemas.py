"""
Ledger transaction schema
"""

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field

OP_INIT = "init"
OP_SUBMIT_PAIR = "submitPair"
OP_SUBMIT_COMPARISON = "submitComparison"

Operation = Literal["init", "submitPair", "submitComparison"]


class Transaction(BaseModel):
    """
    One totally-ordered ledger entry.

    ``payload`` is the canonical binary encoding of the operation arguments
    (see app.ledger.codec).

    Single Responsibility: Ordered transaction representation
    """

    model_config = ConfigDict(frozen=True)

    seq: int = Field(ge=0)
    caller: str = Field(min_length=1)
    op: Operation
    payload: bytes
    ts: float = Field(default=0.0, ge=0.0, allow_inf_nan=False)
