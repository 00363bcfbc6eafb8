"""
Run directory export: CSV timelines, JSON records, ledger log and summary

Column layouts:
  scores.csv        time,robot,score,threshold
  trajectories.csv  time,robot,x,y,theta
"""

import csv
from pathlib import Path
from typing import Any, List, Union

import orjson

from app.ledger.logfile import write_log
from app.sim.report import RunReport

SCORES_FILE = "scores.csv"
INTERSECTIONS_FILE = "intersections.json"
VERDICTS_FILE = "verdicts.json"
TRAJECTORIES_FILE = "trajectories.csv"
LEDGER_FILE = "ledger.log"
REPORT_FILE = "report.json"

SCORE_COLUMNS = ("time", "robot", "score", "threshold")
TRAJECTORY_COLUMNS = ("time", "robot", "x", "y", "theta")


def _write_json(path: Path, data: Any) -> Path:
    path.write_bytes(orjson.dumps(data, option=orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS) + b"\n")
    return path


def _write_csv(path: Path, columns: tuple, rows: List[dict]) -> Path:
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.DictWriter(handle, fieldnames=columns, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    return path


def write_run_directory(report: RunReport, out_dir: Union[str, Path]) -> List[Path]:
    """
    Write the six run files into ``out_dir``, creating it if needed.

    Single Responsibility: Run report serialization
    """
    target = Path(out_dir)
    target.mkdir(parents=True, exist_ok=True)
    return [
        _write_csv(
            target / SCORES_FILE,
            SCORE_COLUMNS,
            [row.model_dump() for row in report.score_timeline],
        ),
        _write_json(
            target / INTERSECTIONS_FILE,
            [row.model_dump(mode="json") for row in report.intersections],
        ),
        _write_json(
            target / VERDICTS_FILE,
            [row.model_dump(mode="json") for row in report.verdicts],
        ),
        _write_csv(
            target / TRAJECTORIES_FILE,
            TRAJECTORY_COLUMNS,
            [row.model_dump() for row in report.trajectories],
        ),
        write_log(target / LEDGER_FILE, report.ledger),
        _write_json(target / REPORT_FILE, report.summary()),
    ]


def read_json(path: Union[str, Path]) -> Any:
    return orjson.loads(Path(path).read_bytes())
