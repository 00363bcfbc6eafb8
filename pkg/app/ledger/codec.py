"""
Canonical binary encoding of transactions, payloads and contract state

Fixed field order, little-endian integers, IEEE-754 doubles and u32
length-prefixed byte strings. The same bytes feed the transaction checksum
and the replicated state digest, so any change here changes every digest.
Reference: https://docs.python.org/3/library/struct.html
"""

import struct
from hashlib import sha256
from typing import List, Tuple, Union

from pydantic import ValidationError as PydanticValidationError

from app.contract.schemas import CompResult, ContractState
from app.core.schemas import ContractConfig, PairRecord, Pose
from app.ledger.schemas import OP_INIT, OP_SUBMIT_COMPARISON, OP_SUBMIT_PAIR, Transaction
from app.shared.exceptions import ValidationError

STATE_DOMAIN = b"byzantine-vision-ledger/state/v1"

_U8 = struct.Struct("<B")
_U32 = struct.Struct("<I")
_U64 = struct.Struct("<Q")
_I64 = struct.Struct("<q")
_F64 = struct.Struct("<d")


class CanonicalWriter:
    """Append-only byte buffer with typed writers."""

    def __init__(self):
        self._parts: List[bytes] = []

    def _pack(self, layout: struct.Struct, value: Union[int, float]) -> "CanonicalWriter":
        try:
            self._parts.append(layout.pack(value))
        except struct.error as exc:
            raise ValidationError(f"value {value!r} does not fit the {layout.format} field") from exc
        return self

    def u8(self, value: int) -> "CanonicalWriter":
        return self._pack(_U8, value)

    def u32(self, value: int) -> "CanonicalWriter":
        return self._pack(_U32, value)

    def u64(self, value: int) -> "CanonicalWriter":
        return self._pack(_U64, value)

    def i64(self, value: int) -> "CanonicalWriter":
        return self._pack(_I64, value)

    def f64(self, value: float) -> "CanonicalWriter":
        return self._pack(_F64, value)

    def boolean(self, value: bool) -> "CanonicalWriter":
        return self.u8(1 if value else 0)

    def blob(self, value: bytes) -> "CanonicalWriter":
        self.u32(len(value))
        self._parts.append(value)
        return self

    def text(self, value: str) -> "CanonicalWriter":
        return self.blob(value.encode("utf-8"))

    def raw(self, value: bytes) -> "CanonicalWriter":
        self._parts.append(value)
        return self

    def getvalue(self) -> bytes:
        return b"".join(self._parts)


class CanonicalReader:
    """Typed reads over a byte string; any short read is a ValidationError."""

    def __init__(self, data: bytes):
        self._data = data
        self._offset = 0

    def _unpack(self, layout: struct.Struct) -> Union[int, float]:
        end = self._offset + layout.size
        if end > len(self._data):
            raise ValidationError("payload is truncated")
        (value,) = layout.unpack_from(self._data, self._offset)
        self._offset = end
        return value

    def u8(self) -> int:
        return int(self._unpack(_U8))

    def u32(self) -> int:
        return int(self._unpack(_U32))

    def u64(self) -> int:
        return int(self._unpack(_U64))

    def f64(self) -> float:
        return float(self._unpack(_F64))

    def boolean(self) -> bool:
        value = self.u8()
        if value > 1:
            raise ValidationError(f"invalid boolean byte {value}")
        return value == 1

    def blob(self) -> bytes:
        length = self.u32()
        end = self._offset + length
        if end > len(self._data):
            raise ValidationError("payload is truncated")
        value = self._data[self._offset:end]
        self._offset = end
        return value

    def text(self) -> str:
        try:
            return self.blob().decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ValidationError("payload text is not valid UTF-8") from exc

    def finish(self) -> None:
        if self._offset != len(self._data):
            raise ValidationError(
                f"{len(self._data) - self._offset} trailing bytes after payload"
            )


# Operation payloads


def encode_init(config: ContractConfig, cloud_identity: str) -> bytes:
    return (
        CanonicalWriter()
        .u32(config.f)
        .u32(config.n)
        .f64(config.d)
        .f64(config.delta)
        .f64(config.m)
        .u32(config.min_completed_sets)
        .text(cloud_identity)
        .getvalue()
    )


def encode_pair(pair: PairRecord) -> bytes:
    return (
        CanonicalWriter()
        .u32(pair.robot)
        .blob(pair.digest)
        .f64(pair.pose.x)
        .f64(pair.pose.y)
        .f64(pair.pose.theta)
        .f64(pair.time)
        .getvalue()
    )


def encode_comparison(result: CompResult) -> bytes:
    return (
        CanonicalWriter()
        .u64(result.set_id)
        .u32(result.robot_a)
        .u32(result.robot_b)
        .boolean(result.anomaly)
        .getvalue()
    )


InitArgs = Tuple[ContractConfig, str]
DecodedPayload = Union[InitArgs, PairRecord, CompResult]


def decode_payload(op: str, payload: bytes) -> DecodedPayload:
    """
    Decode and validate the arguments of a ledger operation.

    Single Responsibility: Payload validation before ordering
    """
    reader = CanonicalReader(payload)
    try:
        if op == OP_INIT:
            config = ContractConfig(
                f=reader.u32(),
                n=reader.u32(),
                d=reader.f64(),
                delta=reader.f64(),
                m=reader.f64(),
                min_completed_sets=reader.u32(),
            )
            identity = reader.text()
            reader.finish()
            if not identity:
                raise ValidationError("init payload carries an empty cloud identity")
            return config, identity
        if op == OP_SUBMIT_PAIR:
            robot = reader.u32()
            digest = reader.blob()
            pose = Pose(x=reader.f64(), y=reader.f64(), theta=reader.f64())
            time = reader.f64()
            reader.finish()
            pair = PairRecord(robot=robot, digest=digest, pose=pose, time=time)
            # a theta outside [-pi, pi) would be normalized and no longer round-trip
            if encode_pair(pair) != payload:
                raise ValidationError("submitPair payload is not canonical")
            return pair
        if op == OP_SUBMIT_COMPARISON:
            result = CompResult(
                set_id=reader.u64(),
                robot_a=reader.u32(),
                robot_b=reader.u32(),
                anomaly=reader.boolean(),
            )
            reader.finish()
            return result
    except PydanticValidationError as exc:
        raise ValidationError(f"malformed {op} payload: {exc.error_count()} invalid fields") from exc
    raise ValidationError(f"unknown operation {op!r}")


def encode_transaction(tx: Transaction) -> bytes:
    return (
        CanonicalWriter()
        .u64(tx.seq)
        .text(tx.caller)
        .text(tx.op)
        .blob(tx.payload)
        .f64(tx.ts)
        .getvalue()
    )


def transaction_checksum(tx: Transaction) -> str:
    return sha256(encode_transaction(tx)).hexdigest()


# Contract state


def encode_state(state: ContractState) -> bytes:
    """
    Canonical serialization of every field of a ContractState.

    Records keep insertion order; sets are written sorted.
    """
    writer = CanonicalWriter().raw(STATE_DOMAIN)
    writer.blob(encode_init(state.config, state.cloud_identity))

    writer.u32(len(state.scores))
    for score in state.scores:
        writer.u64(score)
    for flag in state.byz_flags:
        writer.boolean(flag)
    writer.u64(state.completed_sets)
    for last_time in state.last_pair_times:
        if last_time is None:
            writer.u8(0)
        else:
            writer.u8(1).f64(last_time)

    grid = state.grid
    writer.u64(grid.next_set_id)
    writer.u32(len(grid.records))
    for record in grid.records.values():
        writer.raw(encode_pair(record))
    writer.u32(len(grid.consumed))
    for digest in sorted(grid.consumed):
        writer.raw(digest)
    writer.u32(len(grid.emitted_cells))
    for cell in sorted(grid.emitted_cells):
        writer.i64(cell.i).i64(cell.j)
    writer.u32(len(grid.touched))
    for cell in sorted(grid.touched):
        writer.i64(cell.i).i64(cell.j)

    writer.u32(len(state.intersections))
    for intersection in state.intersections:
        writer.u64(intersection.set_id)
        writer.i64(intersection.origin_cell.i).i64(intersection.origin_cell.j)
        writer.u32(len(intersection.members))
        for member in intersection.members:
            writer.raw(member.digest)

    writer.u32(len(state.graphs))
    for set_id in sorted(state.graphs):
        graph = state.graphs[set_id]
        writer.u64(set_id)
        writer.u32(len(graph.vertices))
        for robot in graph.vertices:
            writer.u32(robot)
        for edge in sorted(graph.edges):
            value = graph.edges[edge]
            writer.u32(edge[0]).u32(edge[1])
            writer.u8(0 if value is None else 2 if value else 1)

    writer.u32(len(state.audit))
    for event in state.audit:
        writer.text(event.kind).text(event.caller).text(event.subject)
        writer.text(event.detail).f64(event.timestamp)

    return writer.getvalue()


def state_digest(state: ContractState) -> bytes:
    """
    SHA-256 over the canonical state encoding.

    Single Responsibility: Replica agreement fingerprint
    """
    return sha256(encode_state(state)).digest()
