"""
Sequencer, replica, replay and ledger file tests
"""

import pytest

from app.contract.schemas import CompResult
from app.contract.service import robot_identity
from app.core.schemas import PairRecord
from app.ledger.codec import (
    decode_payload,
    encode_comparison,
    encode_init,
    encode_pair,
    state_digest,
)
from app.ledger.logfile import encode_line, read_log, write_log
from app.ledger.schemas import OP_INIT, OP_SUBMIT_COMPARISON, OP_SUBMIT_PAIR, Transaction
from app.ledger.service import LedgerCluster, LedgerLog, Replica, replay
from app.shared.exceptions import (
    AuthorizationError,
    DuplicateSubmissionError,
    OrderingError,
    ReplayError,
    ValidationError,
)
from tests.factories import co_located_group, make_pair


@pytest.fixture
def deployed_cluster(field_config) -> LedgerCluster:
    cluster = LedgerCluster(["cloud", "robot-0", "robot-1"])
    cluster.deploy("cloud", field_config, "cloud")
    return cluster


def init_tx(field_config, seq: int = 0) -> Transaction:
    return Transaction(seq=seq, caller="cloud", op=OP_INIT, payload=encode_init(field_config, "cloud"))


def pair_tx(seq: int, robot: int = 0, label: str = "") -> Transaction:
    return Transaction(
        seq=seq,
        caller=robot_identity(robot),
        op=OP_SUBMIT_PAIR,
        payload=encode_pair(make_pair(robot, label=label)),
    )


class TestLedgerLog:
    """
    Test suite for sequence number assignment.

    Single Responsibility: Sequencer testing
    """

    def test_first_entry_gets_seq_zero(self, field_config):
        log = LedgerLog()
        assert log.append("cloud", OP_INIT, encode_init(field_config, "cloud")) == 0
        assert log.append("robot-0", OP_SUBMIT_PAIR, encode_pair(make_pair(0))) == 1
        assert [tx.seq for tx in log] == [0, 1]

    def test_malformed_payload_consumes_no_seq(self):
        log = LedgerLog()
        with pytest.raises(ValidationError):
            log.append("robot-0", OP_SUBMIT_PAIR, b"\x00\x01")
        assert len(log) == 0

    def test_entries_must_be_gapless(self, field_config):
        with pytest.raises(OrderingError):
            LedgerLog([init_tx(field_config), pair_tx(2)])


class TestPayloadDecoding:
    """Test suite for payload validation before ordering."""

    def test_pair_payload(self):
        pair = make_pair(2, x=3.5, y=0.25, theta=1.0, time=4.0)
        assert decode_payload(OP_SUBMIT_PAIR, encode_pair(pair)) == pair

    def test_comparison_payload(self):
        result = CompResult(set_id=9, robot_a=3, robot_b=1, anomaly=True)
        assert decode_payload(OP_SUBMIT_COMPARISON, encode_comparison(result)) == result

    def test_trailing_bytes_rejected(self):
        with pytest.raises(ValidationError):
            decode_payload(OP_SUBMIT_PAIR, encode_pair(make_pair(0)) + b"\x00")

    def test_invalid_boolean_rejected(self):
        payload = encode_comparison(CompResult(set_id=0, robot_a=0, robot_b=1, anomaly=False))
        with pytest.raises(ValidationError):
            decode_payload(OP_SUBMIT_COMPARISON, payload[:-1] + b"\x07")

    def test_same_robot_comparison_rejected(self):
        payload = encode_comparison(CompResult(set_id=0, robot_a=0, robot_b=1, anomaly=False))
        tampered = payload[:8] + payload[8:12] * 2 + payload[16:]
        with pytest.raises(ValidationError):
            decode_payload(OP_SUBMIT_COMPARISON, tampered)

    def test_unknown_operation(self):
        with pytest.raises(ValidationError):
            decode_payload("selfDestruct", b"")

    def test_invalid_init_parameters(self, field_config):
        payload = encode_init(field_config.model_copy(update={"n": 3}), "cloud")
        with pytest.raises(ValidationError):
            decode_payload(OP_INIT, payload)


class TestReplica:
    """Test suite for sequential application."""

    def test_apply_init_and_pair(self, field_config):
        replica = Replica("node")
        assert replica.apply(init_tx(field_config)) is None
        assert replica.apply(pair_tx(1)) is None
        assert replica.applied_seq == 1
        assert len(replica.state.grid) == 1

    def test_duplicate_digest_is_audited_and_advances(self, field_config):
        replica = Replica("node")
        replica.apply(init_tx(field_config))
        replica.apply(pair_tx(1))
        rejection = replica.apply(pair_tx(2))

        assert isinstance(rejection, DuplicateSubmissionError)
        assert replica.applied_seq == 2
        assert replica.state.audit[-1].kind == "rejected"
        assert len(replica.state.grid) == 1

    def test_wrong_caller_is_audited(self, field_config):
        replica = Replica("node")
        replica.apply(init_tx(field_config))
        tx = Transaction(
            seq=1, caller="robot-1", op=OP_SUBMIT_PAIR, payload=encode_pair(make_pair(0))
        )
        assert isinstance(replica.apply(tx), AuthorizationError)

    def test_sequence_gap(self, field_config):
        replica = Replica("node")
        replica.apply(init_tx(field_config))
        with pytest.raises(OrderingError):
            replica.apply(pair_tx(3))
        assert replica.applied_seq == 0

    def test_operation_before_init(self):
        replica = Replica("node")
        with pytest.raises(OrderingError):
            replica.apply(pair_tx(0))
        assert replica.applied_seq == -1

    def test_second_init_is_rejected(self, field_config):
        replica = Replica("node")
        replica.apply(init_tx(field_config))
        before = replica.digest()
        rejection = replica.apply(init_tx(field_config, seq=1))
        assert isinstance(rejection, DuplicateSubmissionError)
        assert replica.digest() != before
        assert replica.state.scores == [0, 0, 0, 0]


class TestStateDigest:
    """Test suite for the replica agreement fingerprint."""

    def test_equal_histories_give_equal_digests(self, field_config):
        entries = [init_tx(field_config), pair_tx(1), pair_tx(2, robot=1)]
        assert state_digest(replay(entries)) == state_digest(replay(entries))

    def test_score_changes_digest(self, field_config):
        state = replay([init_tx(field_config)])
        before = state_digest(state)
        state.scores[2] += 1
        assert state_digest(state) != before

    def test_fresh_state_digest(self, field_config):
        from app.contract.service import DetectionContract

        fresh = DetectionContract.from_config(field_config, "cloud").state
        assert state_digest(replay([init_tx(field_config)])) == state_digest(fresh)


class TestCluster:
    """Test suite for replicated submission."""

    def test_replicas_agree_after_every_entry(self, deployed_cluster):
        for pair in co_located_group(1.0, 1.0):
            deployed_cluster.submit_pair(robot_identity(pair.robot), pair)
        deployed_cluster.submit_comparison(
            "cloud", CompResult(set_id=0, robot_a=0, robot_b=1, anomaly=True)
        )
        assert len(deployed_cluster.digest_trail) == len(deployed_cluster.log) == 6
        digests = {replica.digest() for replica in deployed_cluster.replicas}
        assert len(digests) == 1

    def test_rejection_is_returned_and_ordered(self, deployed_cluster):
        deployed_cluster.submit_pair("robot-0", make_pair(0))
        seq, rejection = deployed_cluster.submit_pair("robot-0", make_pair(0))
        assert seq == 2
        assert isinstance(rejection, DuplicateSubmissionError)

    def test_out_of_order_pair_is_an_ordered_rejection(self, deployed_cluster):
        deployed_cluster.submit_pair("robot-0", make_pair(0, time=5.0))
        seq, rejection = deployed_cluster.submit_pair("robot-0", make_pair(0, x=2.0, time=4.0))
        assert seq == 2
        assert isinstance(rejection, ValidationError)
        assert deployed_cluster.contract.state.audit[-1].kind == "rejected"
        assert len({replica.digest() for replica in deployed_cluster.replicas}) == 1

    def test_submission_before_deploy(self):
        cluster = LedgerCluster(["cloud"])
        with pytest.raises(OrderingError):
            cluster.submit_pair("robot-0", make_pair(0))
        assert len(cluster.log) == 0

    def test_cluster_needs_a_replica(self):
        with pytest.raises(ValidationError):
            LedgerCluster([])

    def test_robot_id_beyond_u32_is_a_validation_error(self, deployed_cluster):
        with pytest.raises(ValueError):
            make_pair(2**32)

        unchecked = PairRecord.model_construct(**{**dict(make_pair(0)), "robot": 2**32})
        with pytest.raises(ValidationError):
            deployed_cluster.submit_pair(robot_identity(2**32), unchecked)
        assert len(deployed_cluster.log) == 1

    def test_set_id_beyond_u64_is_a_validation_error(self, deployed_cluster):
        unchecked = CompResult.model_construct(set_id=2**64, robot_a=0, robot_b=1, anomaly=True)
        with pytest.raises(ValidationError):
            deployed_cluster.submit_comparison("cloud", unchecked)
        assert len(deployed_cluster.log) == 1


class TestReplay:
    """Test suite for deterministic reconstruction."""

    def test_replay_matches_run_digest(self, byzantine_report):
        state = replay(byzantine_report.ledger)
        assert state_digest(state).hex() == byzantine_report.final_digest
        assert state.scores == byzantine_report.final_scores

    @pytest.mark.parametrize("prefix", [1, 5, 40])
    def test_prefix_matches_trail(self, byzantine_report, prefix):
        state = replay(byzantine_report.ledger[:prefix])
        assert state_digest(state).hex() == byzantine_report.digest_trail[prefix - 1]

    def test_empty_log(self):
        with pytest.raises(ReplayError):
            replay([])

    def test_gap_reports_entry_index(self, field_config):
        with pytest.raises(ReplayError) as exc_info:
            replay([init_tx(field_config), pair_tx(1), pair_tx(3)])
        assert exc_info.value.index == 2
        assert exc_info.value.message.startswith("entry 2:")


class TestLedgerFile:
    """Test suite for the newline-delimited ledger file."""

    def test_written_log_reads_back(self, tmp_path, byzantine_report):
        path = write_log(tmp_path / "ledger.jsonl", byzantine_report.ledger)
        assert read_log(path) == byzantine_report.ledger

    def test_line_format(self, field_config):
        line = encode_line(init_tx(field_config))
        assert line.endswith(b"\n")
        assert line.startswith(b'{"caller":"cloud","checksum":"')

    def test_empty_file(self, tmp_path):
        path = tmp_path / "ledger.jsonl"
        path.write_bytes(b"")
        assert read_log(path) == []

    @pytest.mark.parametrize("offset", [0, 3, 17, 60, 101, -2, -1])
    def test_flipped_byte_is_detected(self, tmp_path, field_config, offset):
        entries = [init_tx(field_config), pair_tx(1), pair_tx(2, robot=1)]
        data = bytearray(b"".join(encode_line(tx) for tx in entries))
        data[offset] ^= 0x01
        path = tmp_path / "ledger.jsonl"
        path.write_bytes(bytes(data))
        with pytest.raises(ReplayError):
            read_log(path)

    def test_unterminated_last_line(self, tmp_path, field_config):
        data = encode_line(init_tx(field_config)) + encode_line(pair_tx(1))
        path = tmp_path / "ledger.jsonl"
        path.write_bytes(data[:-1])
        with pytest.raises(ReplayError) as exc_info:
            read_log(path)
        assert exc_info.value.index == 1

    def test_truncation_at_line_boundary_gives_prefix(self, tmp_path, byzantine_report):
        lines = [encode_line(tx) for tx in byzantine_report.ledger[:10]]
        path = tmp_path / "ledger.jsonl"
        path.write_bytes(b"".join(lines))
        entries = read_log(path)
        assert len(entries) == 10
        assert state_digest(replay(entries)).hex() == byzantine_report.digest_trail[9]

    def test_reordered_lines(self, tmp_path, field_config):
        first, second = encode_line(init_tx(field_config)), encode_line(pair_tx(1))
        path = tmp_path / "ledger.jsonl"
        path.write_bytes(second + first)
        with pytest.raises(ReplayError) as exc_info:
            read_log(path)
        assert exc_info.value.index == 0
