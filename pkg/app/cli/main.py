"""
Command-line front end

  byzdetect run --config <path> [--seed <u64>] --out <dir>
  byzdetect replay --ledger <path>
  byzdetect report <dir>
  byzdetect serve [--host <host>] [--port <port>]

Exit codes: 0 success, 1 runtime or verification failure, 2 usage or
configuration error. Log verbosity follows BYZ_LOG_LEVEL or --log-level.
"""

import argparse
import sys
from pathlib import Path
from typing import List, Optional

import orjson
import structlog

from app.cli.export import (
    INTERSECTIONS_FILE,
    REPORT_FILE,
    VERDICTS_FILE,
    read_json,
    write_run_directory,
)
from app.ledger.codec import state_digest
from app.ledger.logfile import read_log
from app.ledger.service import replay
from app.shared.config import settings
from app.shared.exceptions import (
    EXIT_FAILURE,
    EXIT_OK,
    EXIT_USAGE,
    BaseAppException,
    ConfigurationError,
)
from app.shared.monitoring import configure_logging
from app.sim.runner import run_experiment
from app.sim.schemas import load_experiment

logger = structlog.get_logger(__name__)


def _seed(value: str) -> int:
    seed = int(value, 0)
    if not 0 <= seed < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return seed


def _fail(message: str, code: int) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def cmd_run(args: argparse.Namespace) -> int:
    """
    Run an experiment and write its run directory.

    Single Responsibility: Experiment command
    """
    try:
        config = load_experiment(args.config, seed=args.seed)
    except ConfigurationError as exc:
        return _fail(exc.message, exc.exit_code)

    try:
        report = run_experiment(config, verify_replicas=not args.no_verify)
        written = write_run_directory(report, args.out)
    except BaseAppException as exc:
        logger.error("run_failed", error=exc.message)
        return _fail(exc.message, exc.exit_code)
    except OSError as exc:
        return _fail(f"cannot write run directory {args.out}: {exc}", EXIT_FAILURE)

    print(f"wrote {len(written)} files to {args.out}")
    print(f"final digest {report.final_digest}")
    return EXIT_OK


def cmd_replay(args: argparse.Namespace) -> int:
    """
    Replay a ledger file and check it against the co-located report.json.

    A log cut at a line boundary replays as a prefix and is checked against
    the digest recorded for that sequence number.

    Single Responsibility: Ledger verification command
    """
    ledger_path = Path(args.ledger)
    try:
        entries = read_log(ledger_path)
        state = replay(entries)
    except OSError as exc:
        return _fail(f"cannot read ledger {ledger_path}: {exc.strerror}", EXIT_USAGE)
    except BaseAppException as exc:
        return _fail(f"corrupt ledger: {exc.message}", exc.exit_code)

    digest = state_digest(state).hex()
    print(f"replayed {len(entries)} entries")
    print(f"digest {digest}")

    report_path = ledger_path.parent / REPORT_FILE
    if not report_path.exists():
        return EXIT_OK
    try:
        summary = read_json(report_path)
    except (OSError, orjson.JSONDecodeError) as exc:
        return _fail(f"cannot read {report_path}: {exc}", EXIT_FAILURE)

    recorded = summary.get("stats", {}).get("ledger_entries")
    trail = summary.get("digest_trail") or []
    if recorded is not None and len(entries) > recorded:
        return _fail(
            f"ledger has {len(entries)} entries but the run recorded {recorded}", EXIT_FAILURE
        )
    if len(entries) == recorded:
        expected = summary.get("final_digest")
    elif len(entries) <= len(trail):
        expected = trail[len(entries) - 1]
    else:
        print(f"no recorded digest for a {len(entries)}-entry prefix")
        return EXIT_OK

    if digest != expected:
        return _fail(f"digest mismatch: report.json records {expected}", EXIT_FAILURE)
    print("digest matches report.json")
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    """
    Print per-robot verdicts, scores and the intersection count of a run.

    Single Responsibility: Run summary command
    """
    run_dir = Path(args.run_dir)
    try:
        summary = read_json(run_dir / REPORT_FILE)
        verdicts = read_json(run_dir / VERDICTS_FILE)
        intersections = read_json(run_dir / INTERSECTIONS_FILE)
    except OSError as exc:
        return _fail(f"incomplete run directory {run_dir}: {exc.strerror} ({exc.filename})", EXIT_USAGE)
    except orjson.JSONDecodeError as exc:
        return _fail(f"unreadable run file in {run_dir}: {exc}", EXIT_USAGE)

    threshold = summary.get("final_threshold", 0.0)
    print(f"run {summary.get('name')} seed {summary.get('seed')}")
    print(f"intersections: {len(intersections)}")
    print(f"threshold: {threshold:.3f}")
    for row in verdicts:
        label = "FLAGGED" if row["flagged"] else "ok"
        line = f"robot {row['robot']}: {label} score={row['score']} threshold={threshold:.3f}"
        if row["flagged"] and row.get("flag_time") is not None:
            line += f" flagged_at={row['flag_time']}"
        print(line)
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    """Run the node API with uvicorn."""
    import uvicorn

    uvicorn.run("app.main:app", host=args.host, port=args.port, log_level=args.log_level.lower())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="byzdetect",
        description="Decentralized byzantine robot detection simulator",
    )
    parser.add_argument(
        "--log-level",
        default=settings.log_level,
        help="log verbosity (default from BYZ_LOG_LEVEL)",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="run an experiment")
    run.add_argument("--config", required=True, help="experiment YAML file")
    run.add_argument("--seed", type=_seed, default=None, help="override the config seed")
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument(
        "--no-verify",
        action="store_true",
        help="keep a single replica and skip per-transaction digest checks",
    )
    run.set_defaults(handler=cmd_run)

    replay_cmd = commands.add_parser("replay", help="replay and verify a ledger log")
    replay_cmd.add_argument("--ledger", required=True, help="ledger.log path")
    replay_cmd.set_defaults(handler=cmd_replay)

    report = commands.add_parser("report", help="summarize a run directory")
    report.add_argument("run_dir", help="directory written by run")
    report.set_defaults(handler=cmd_report)

    serve = commands.add_parser("serve", help="serve the node API")
    serve.add_argument("--host", default=settings.api_host)
    serve.add_argument("--port", type=int, default=settings.api_port)
    serve.set_defaults(handler=cmd_serve)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    configure_logging(level=args.log_level)
    return args.handler(args)


if __name__ == "__main__":
    sys.exit(main())
