"""Operator command line: validate, simulate, metrics, serve."""
from __future__ import annotations

import argparse
import json
import socket
import sys
import threading
from pathlib import Path

from .clock import VirtualClock, WallClock
from .config import (build_corpus, build_filters, build_provider,
                     load_engine_config)
from .engine import LiveEngine
from .errors import IncompatibleLog, PackageFormatError, SimulationError
from .events import EventLog, read_log
from .gateway import create_gateway_app
from .metrics import compute_metrics, render_table
from .narrative import load_package, validate_package
from .simulate import load_script, run_simulation


def cmd_validate(args: argparse.Namespace) -> int:
    try:
        package = load_package(args.package)
    except PackageFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    defects = validate_package(package)
    for defect in defects:
        print(defect)
    if defects:
        print(f"{len(defects)} defect(s) found", file=sys.stderr)
        return 1
    print(f"{args.package}: ok ({len(package.nodes)} nodes)")
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    try:
        package = load_package(args.package)
    except PackageFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    defects = validate_package(package)
    if defects:
        for defect in defects:
            print(defect, file=sys.stderr)
        return 1
    try:
        script = load_script(args.script)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot read script: {exc}", file=sys.stderr)
        return 2
    except SimulationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    out = Path(args.out)
    if out.exists():
        out.unlink()  # each simulation writes a fresh log
    try:
        engine, metrics = run_simulation(package, script, out, seed=args.seed)
    except SimulationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    released = engine.snapshot()["story"]["released"]
    print(f"simulation complete: released {' -> '.join(released)}")
    print(f"log written to {out}")
    print(json.dumps(metrics.to_dict(), indent=2, sort_keys=True))
    print(render_table(metrics))
    return 0


def cmd_metrics(args: argparse.Namespace) -> int:
    try:
        records = read_log(args.log)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot read log: {exc}", file=sys.stderr)
        return 2
    except IncompatibleLog as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    metrics = compute_metrics(records,
                              community_total_messages=args.community_total)
    print(json.dumps(metrics.to_dict(), indent=2, sort_keys=True))
    print(render_table(metrics))
    return 0


def _port_free(host: str, port: int) -> bool:
    with socket.socket(socket.AF_INET, socket.SOCK_STREAM) as sock:
        sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        try:
            sock.bind((host, port))
        except OSError:
            return False
    return True


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    try:
        package = load_package(args.package)
    except PackageFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    defects = validate_package(package)
    if defects:
        for defect in defects:
            print(defect, file=sys.stderr)
        return 1
    config = load_engine_config(args.config)
    if not _port_free(args.host, args.port):
        print(f"error: {args.host}:{args.port} is already in use", file=sys.stderr)
        return 2

    clock = VirtualClock() if args.virtual_clock else WallClock()
    log = EventLog(args.log)
    engine = LiveEngine(
        package,
        provider=build_provider(config),
        filters=build_filters(config),
        clock=clock,
        corpus=build_corpus(config),
        log=log,
        day_seconds=config.day_seconds,
        clue_threshold=config.clue_threshold,
        history_rounds=config.history_rounds,
        refusal_template=config.refusal_template,
        apology_template=config.apology_template,
    )
    engine.start()
    app = create_gateway_app(engine, admin_token=config.admin_token)

    stop = threading.Event()

    def ticker() -> None:
        while not stop.wait(args.tick_interval):
            engine.tick()

    tick_thread = threading.Thread(target=ticker, daemon=True)
    tick_thread.start()
    try:
        uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    finally:
        stop.set()
        tick_thread.join(timeout=2)
        log.close()
    return 0


def cmd_serve_clues(args: argparse.Namespace) -> int:
    import uvicorn

    from .clue_service import create_clue_app
    from .clues import load_corpus

    corpus = load_corpus(args.corpus)
    if not _port_free(args.host, args.port):
        print(f"error: {args.host}:{args.port} is already in use", file=sys.stderr)
        return 2
    app = create_clue_app(corpus, threshold=args.threshold)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="storyhost",
        description="Run community story events: validate packages, simulate "
                    "runs, report engagement, serve the gateway.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a story package for defects")
    p.add_argument("package")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("simulate", help="run a scripted event under a virtual clock")
    p.add_argument("package")
    p.add_argument("script")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="simulation.ndjson", help="event log path")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("metrics", help="engagement report from an event log")
    p.add_argument("log")
    p.add_argument("--community-total", type=int, default=None,
                   help="community-wide message count for channel share")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("serve", help="serve the gateway for a story package")
    p.add_argument("package")
    p.add_argument("--config", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--log", default="storyhost-events.ndjson")
    p.add_argument("--virtual-clock", action="store_true",
                   help="use an adjustable clock (demo / simulation mode)")
    p.add_argument("--tick-interval", type=float, default=0.5,
                   help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("serve-clues", help="serve the clue-matching microservice")
    p.add_argument("corpus")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8100)
    p.add_argument("--threshold", type=float, default=0.6)
    p.set_defaults(func=cmd_serve_clues)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
