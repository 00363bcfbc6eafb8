"""
Command-line tests: run, replay and report over real run directories
"""

import csv
from collections import defaultdict
from pathlib import Path

import pytest

from app.cli.export import (
    INTERSECTIONS_FILE,
    LEDGER_FILE,
    REPORT_FILE,
    SCORES_FILE,
    TRAJECTORIES_FILE,
    VERDICTS_FILE,
    read_json,
)
from app.cli.main import main

BYZANTINE = str(Path(__file__).resolve().parents[1] / "configs" / "patrol_byzantine.yaml")
HONEST = str(Path(__file__).resolve().parents[1] / "configs" / "patrol_honest.yaml")


@pytest.fixture(scope="module")
def run_dir(tmp_path_factory):
    """Run directory of the perfect-oracle patrol experiment."""
    out = tmp_path_factory.mktemp("run")
    assert main(["run", "--config", BYZANTINE, "--out", str(out)]) == 0
    return out


class TestRunCommand:
    """
    Test suite for ``run``.

    Single Responsibility: Experiment command testing
    """

    def test_writes_six_files(self, run_dir):
        names = {path.name for path in run_dir.iterdir()}
        assert names == {
            SCORES_FILE,
            INTERSECTIONS_FILE,
            VERDICTS_FILE,
            TRAJECTORIES_FILE,
            LEDGER_FILE,
            REPORT_FILE,
        }

    def test_report_summary(self, run_dir):
        summary = read_json(run_dir / REPORT_FILE)
        assert len(read_json(run_dir / INTERSECTIONS_FILE)) == summary["stats"]["sets_published"]
        assert summary["final_scores"] == [54, 18, 18, 18]
        assert summary["stats"]["ledger_entries"] == len(summary["digest_trail"])
        assert "score_timeline" not in summary

    def test_scores_csv_thresholds(self, run_dir):
        with (run_dir / SCORES_FILE).open(newline="") as handle:
            rows = list(csv.DictReader(handle))
        assert list(rows[0]) == ["time", "robot", "score", "threshold"]
        by_time = defaultdict(list)
        for row in rows:
            by_time[row["time"]].append(row)
        for group in by_time.values():
            mean = sum(int(row["score"]) for row in group) / len(group)
            for row in group:
                assert abs(float(row["threshold"]) - 1.3 * mean) < 1e-9

    def test_trajectory_columns(self, run_dir):
        header = (run_dir / TRAJECTORIES_FILE).read_text().splitlines()[0]
        assert header == "time,robot,x,y,theta"

    def test_same_seed_is_byte_identical(self, run_dir, tmp_path):
        assert main(["run", "--config", BYZANTINE, "--out", str(tmp_path), "--no-verify"]) == 0
        for name in (SCORES_FILE, INTERSECTIONS_FILE, VERDICTS_FILE, LEDGER_FILE):
            assert (tmp_path / name).read_bytes() == (run_dir / name).read_bytes()

    def test_seed_override_is_recorded(self, tmp_path):
        assert main(["run", "--config", BYZANTINE, "--seed", "11", "--out", str(tmp_path)]) == 0
        assert read_json(tmp_path / REPORT_FILE)["seed"] == 11

    def test_missing_config(self, tmp_path, capsys):
        code = main(["run", "--config", str(tmp_path / "nope.yaml"), "--out", str(tmp_path / "out")])
        assert code == 2
        assert "error:" in capsys.readouterr().err

    def test_invalid_config(self, tmp_path):
        config = tmp_path / "bad.yaml"
        config.write_text("duration: -1\n", encoding="utf-8")
        assert main(["run", "--config", str(config), "--out", str(tmp_path / "out")]) == 2

    def test_usage_errors(self):
        assert main([]) == 2
        assert main(["run", "--config", BYZANTINE]) == 2
        assert main(["run", "--config", BYZANTINE, "--out", "x", "--seed", "-3"]) == 2


class TestReplayCommand:
    """Test suite for ``replay``."""

    def test_untouched_ledger_matches(self, run_dir, capsys):
        assert main(["replay", "--ledger", str(run_dir / LEDGER_FILE)]) == 0
        output = capsys.readouterr().out
        assert "replayed 181 entries" in output
        assert "digest matches report.json" in output

    def test_mutated_byte_is_reported(self, run_dir, tmp_path, capsys):
        data = bytearray((run_dir / LEDGER_FILE).read_bytes())
        data[len(data) // 2] ^= 0x01
        (tmp_path / LEDGER_FILE).write_bytes(bytes(data))

        assert main(["replay", "--ledger", str(tmp_path / LEDGER_FILE)]) == 1
        assert "corrupt ledger: entry" in capsys.readouterr().err

    def test_truncated_ledger_replays_prefix(self, run_dir, tmp_path, capsys):
        lines = (run_dir / LEDGER_FILE).read_bytes().splitlines(keepends=True)
        (tmp_path / LEDGER_FILE).write_bytes(b"".join(lines[:50]))
        (tmp_path / REPORT_FILE).write_bytes((run_dir / REPORT_FILE).read_bytes())
        trail = read_json(run_dir / REPORT_FILE)["digest_trail"]

        assert main(["replay", "--ledger", str(tmp_path / LEDGER_FILE)]) == 0
        output = capsys.readouterr().out
        assert "replayed 50 entries" in output
        assert f"digest {trail[49]}" in output
        assert "digest matches report.json" in output

    def test_mismatched_report(self, run_dir, tmp_path, capsys):
        (tmp_path / LEDGER_FILE).write_bytes((run_dir / LEDGER_FILE).read_bytes())
        (tmp_path / REPORT_FILE).write_text(
            '{"final_digest": "00", "digest_trail": [], "stats": {"ledger_entries": 181}}'
        )
        assert main(["replay", "--ledger", str(tmp_path / LEDGER_FILE)]) == 1
        assert "digest mismatch" in capsys.readouterr().err

    def test_missing_ledger(self, tmp_path):
        assert main(["replay", "--ledger", str(tmp_path / LEDGER_FILE)]) == 2


class TestReportCommand:
    """Test suite for ``report``."""

    def test_verdict_lines(self, run_dir, capsys):
        assert main(["report", str(run_dir)]) == 0
        output = capsys.readouterr().out
        assert "intersections: 18" in output
        assert "robot 0: FLAGGED score=54" in output
        assert "flagged_at=6.0" in output
        for robot in (1, 2, 3):
            assert f"robot {robot}: ok score=18" in output

    def test_incomplete_directory(self, run_dir, tmp_path):
        (tmp_path / REPORT_FILE).write_bytes((run_dir / REPORT_FILE).read_bytes())
        assert main(["report", str(tmp_path)]) == 2

    def test_honest_run_is_all_ok(self, tmp_path, capsys):
        assert main(["run", "--config", HONEST, "--out", str(tmp_path), "--no-verify"]) == 0
        capsys.readouterr()
        assert main(["report", str(tmp_path)]) == 0
        output = capsys.readouterr().out
        assert "FLAGGED" not in output
        for robot in range(4):
            assert f"robot {robot}: ok score=0" in output
