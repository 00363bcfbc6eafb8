"""
Ledger log file: one JSON object per line

Each line holds the transaction fields with a base64 payload and the SHA-256
of the canonical transaction encoding, serialized by orjson with sorted keys.
A line is accepted only if its checksum matches and it re-serializes to the
exact same bytes. Files may be truncated at a line boundary; a final line
without its newline is corrupt.
Reference: https://github.com/ijl/orjson#option
"""

import base64
import binascii
from pathlib import Path
from typing import Iterable, List, Union

import orjson
from pydantic import ValidationError as PydanticValidationError

from app.ledger.codec import transaction_checksum
from app.ledger.schemas import Transaction
from app.shared.exceptions import ReplayError

LINE_FIELDS = frozenset({"seq", "caller", "op", "payload", "ts", "checksum"})


def encode_line(tx: Transaction) -> bytes:
    record = {
        "seq": tx.seq,
        "caller": tx.caller,
        "op": tx.op,
        "payload": base64.b64encode(tx.payload).decode("ascii"),
        "ts": tx.ts,
        "checksum": transaction_checksum(tx),
    }
    return orjson.dumps(record, option=orjson.OPT_SORT_KEYS) + b"\n"


def decode_line(line: bytes, index: int) -> Transaction:
    """
    Parse and verify one terminated line.

    Single Responsibility: Ledger line integrity check
    """
    try:
        record = orjson.loads(line)
    except orjson.JSONDecodeError as exc:
        raise ReplayError(f"not valid JSON ({exc})", index=index) from exc
    if not isinstance(record, dict) or set(record) != LINE_FIELDS:
        raise ReplayError("unexpected record layout", index=index)
    if not isinstance(record["payload"], str):
        raise ReplayError("payload is not a base64 string", index=index)

    try:
        payload = base64.b64decode(record["payload"], validate=True)
        tx = Transaction(
            seq=record["seq"],
            caller=record["caller"],
            op=record["op"],
            payload=payload,
            ts=record["ts"],
        )
    except (binascii.Error, PydanticValidationError) as exc:
        raise ReplayError(f"invalid transaction fields ({exc})", index=index) from exc

    if tx.seq != index:
        raise ReplayError(f"sequence number {tx.seq} out of place", index=index)
    if record["checksum"] != transaction_checksum(tx):
        raise ReplayError("checksum mismatch", index=index)
    if encode_line(tx) != line + b"\n":
        raise ReplayError("line is not in canonical form", index=index)
    return tx


def read_log(path: Union[str, Path]) -> List[Transaction]:
    """
    Load and verify every entry of a ledger file.

    Single Responsibility: Ledger file loading
    """
    data = Path(path).read_bytes()
    if not data:
        return []
    lines = data.split(b"\n")
    trailing = lines.pop()
    if trailing:
        raise ReplayError("last entry is not newline-terminated", index=len(lines))
    return [decode_line(line, index) for index, line in enumerate(lines)]


def write_log(path: Union[str, Path], entries: Iterable[Transaction]) -> Path:
    target = Path(path)
    target.write_bytes(b"".join(encode_line(tx) for tx in entries))
    return target
