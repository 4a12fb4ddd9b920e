"""Operator entry points: simulate, analyze, serve, replay-check.

Exit codes: 0 success, 2 unusable scenario config, 3 corrupt event log,
4 environment failure (e.g. port in use), 5 invariant violation.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Optional

from .errors import CorruptLog, DelibError, Invalid, NotFound
from .model import SCHEMA_VERSION
from .sim import build_analysis, run_experiment
from .store import DeliberationStore, canonical_json, read_events, replay, snapshot

EXIT_OK = 0
EXIT_BAD_SPEC = 2
EXIT_CORRUPT_LOG = 3
EXIT_ENVIRONMENT = 4
EXIT_INVARIANT = 5


def _fail(code: int, message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def _write_doc(doc: dict[str, Any], out: Optional[str]) -> None:
    data = canonical_json(doc) + b"\n"
    if out is None or out == "-":
        sys.stdout.buffer.write(data)
    else:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_bytes(data)


def cmd_simulate(args: argparse.Namespace) -> int:
    try:
        doc = json.loads(Path(args.config).read_text(encoding="utf-8"))
    except FileNotFoundError:
        return _fail(EXIT_BAD_SPEC, f"no scenario config at {args.config}")
    except json.JSONDecodeError as exc:
        return _fail(EXIT_BAD_SPEC, f"scenario config is not valid JSON: {exc}")
    try:
        engine, metrics = run_experiment(doc, seed=args.seed)
    except (Invalid, KeyError, TypeError) as exc:
        return _fail(EXIT_BAD_SPEC, f"unusable scenario config: {exc}")
    if args.data_dir:
        store = DeliberationStore(args.data_dir)
        store.dump_events(engine)
        store.write_snapshot(engine)
    report = {
        "schema_version": SCHEMA_VERSION,
        "scenario": metrics.get("scenario"),
        "seed": metrics.get("seed"),
        "metrics": metrics,
        "analysis": build_analysis(engine),
    }
    _write_doc(report, args.out)
    return EXIT_OK


def cmd_analyze(args: argparse.Namespace) -> int:
    try:
        engine = replay(read_events(args.log))
    except NotFound as exc:
        return _fail(EXIT_CORRUPT_LOG, str(exc))
    except CorruptLog as exc:
        return _fail(EXIT_CORRUPT_LOG, f"corrupt log: {exc}")
    analysis = build_analysis(engine, threshold=args.threshold, top_k=args.top_k)
    _write_doc(analysis, args.out)
    return EXIT_OK


def cmd_replay_check(args: argparse.Namespace) -> int:
    try:
        events = read_events(args.log)
        first = snapshot(replay(events).state)
        second = snapshot(replay(events).state)
    except NotFound as exc:
        return _fail(EXIT_CORRUPT_LOG, str(exc))
    except CorruptLog as exc:
        return _fail(EXIT_CORRUPT_LOG, f"corrupt log: {exc}")
    except DelibError as exc:
        return _fail(EXIT_CORRUPT_LOG, f"log does not replay cleanly: {exc}")
    if first != second:
        return _fail(EXIT_INVARIANT, "two replays of the same log disagree")
    stored = _stored_snapshot(args)
    if stored is not None and stored != first:
        return _fail(EXIT_INVARIANT, "replayed state differs from the stored snapshot")
    print(f"replay ok: {len(events)} events, snapshot {len(first)} bytes")
    return EXIT_OK


def _stored_snapshot(args: argparse.Namespace) -> Optional[bytes]:
    if args.snapshot:
        return Path(args.snapshot).read_bytes()
    snapshots = Path(args.log).parent / "snapshots"
    if snapshots.is_dir():
        candidates = sorted(
            snapshots.glob("*.snap"), key=lambda p: int(p.stem), reverse=True
        )
        if candidates:
            return candidates[0].read_bytes()
    return None


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .engine import utc_clock
    from .service import DeliberationService, create_app

    store = DeliberationStore(args.data_dir)
    try:
        service = DeliberationService(store, clock=utc_clock)
    except CorruptLog as exc:
        return _fail(EXIT_CORRUPT_LOG, f"corrupt log under {args.data_dir}: {exc}")
    app = create_app(service)
    try:
        uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    except (OSError, SystemExit) as exc:
        return _fail(EXIT_ENVIRONMENT, f"cannot serve on {args.host}:{args.port}: {exc}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="delib", description="deliberation engine operator tools"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    simulate = sub.add_parser("simulate", help="run a scenario and write its report")
    simulate.add_argument("--config", required=True, help="scenario config (JSON)")
    simulate.add_argument("--seed", type=int, default=None, help="override the config seed")
    simulate.add_argument("--out", default=None, help="report path (default stdout)")
    simulate.add_argument("--data-dir", default=None, help="persist the event log here")
    simulate.set_defaults(func=cmd_simulate)

    analyze = sub.add_parser("analyze", help="replay a log and emit reports")
    analyze.add_argument("--log", required=True, help="events.log path")
    analyze.add_argument("--threshold", type=float, default=None)
    analyze.add_argument("--top-k", type=int, default=None)
    analyze.add_argument("--out", default=None, help="report path (default stdout)")
    analyze.set_defaults(func=cmd_analyze)

    check = sub.add_parser("replay-check", help="verify deterministic replay")
    check.add_argument("--log", required=True, help="events.log path")
    check.add_argument("--snapshot", default=None, help="expected snapshot to compare against")
    check.set_defaults(func=cmd_replay_check)

    serve = sub.add_parser("serve", help="serve the HTTP API over a data directory")
    serve.add_argument("--data-dir", required=True)
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8400)
    serve.set_defaults(func=cmd_serve)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
