"""Command-line interface.

Subcommands: run, sweep, ansatz, oracle, events (re-detect from an existing
series), validate (config lint).  Exit codes: 0 success, 2 config error,
3 numerical abort.  LADDER_DQPT_THREADS caps internal linear-algebra
parallelism when threadpoolctl is available.
"""

from __future__ import annotations

import argparse
import contextlib
import os
import sys

from .evolution import TruncationAbort
from .runio import (
    ConfigError,
    export_events,
    load_config,
    parse_events,
    records_from_series,
    run,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _thread_limit():
    raw = os.environ.get("LADDER_DQPT_THREADS")
    if not raw:
        return contextlib.nullcontext()
    try:
        limit = int(raw)
    except ValueError:
        return contextlib.nullcontext()
    try:
        from threadpoolctl import threadpool_limits

        return threadpool_limits(limits=limit)
    except ImportError:
        return contextlib.nullcontext()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ladder-dqpt",
        description="DQPT simulator for the quantum Ising model on semi-infinite ladders",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", required=True, help="key=value config file")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--seed", type=int, default=0, help="seed for randomized SVD")
        p.add_argument("--refine", choices=["on", "off"], default=None,
                       help="override the config's DQPT-window refinement")
        p.add_argument("--jobs", type=int, default=1, help="concurrent sweep points")

    add_common(sub.add_parser("run", help="evolve one quench and export artifacts"))
    add_common(sub.add_parser("sweep", help="evolve over the configured l_perp values"))

    p_ansatz = sub.add_parser("ansatz", help="evaluate an analytical ansatz on the grid")
    add_common(p_ansatz)
    p_ansatz.add_argument("--kind", choices=["p", "e"], required=True,
                          help="precession (p) or interaction (e) ansatz")

    add_common(sub.add_parser("oracle", help="exact torus reference on the grid"))

    p_events = sub.add_parser("events", help="re-detect events from an exported series")
    p_events.add_argument("--series", required=True)
    p_events.add_argument("--eps-deg", type=float, default=1e-3)
    p_events.add_argument("--out", required=True, help="events file to write")

    p_val = sub.add_parser("validate", help="lint a config file")
    p_val.add_argument("--config", required=True)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)

    if args.command == "events":
        from .observables import detect_dqpts

        try:
            records = records_from_series(args.series)
            events = detect_dqpts(records, eps_deg=args.eps_deg)
        except (OSError, ValueError, KeyError) as err:
            print(f"error: {err}", file=sys.stderr)
            return EXIT_CONFIG
        export_events(events, args.out)
        print(f"wrote {args.out} ({len(events)} events)")
        return EXIT_OK

    if args.command == "validate":
        try:
            load_config(args.config)
        except ConfigError as err:
            print(f"config error: {err}", file=sys.stderr)
            return EXIT_CONFIG
        print("config ok")
        return EXIT_OK

    mode = {"run": "evolve", "sweep": "sweep", "ansatz": None, "oracle": "oracle"}[args.command]
    if args.command == "ansatz":
        mode = f"ansatz-{args.kind}"
    try:
        manifest = load_config(args.config, mode=mode)
        manifest.out_dir = args.out
        manifest.seed = args.seed
        manifest.jobs = max(1, args.jobs)
        threads = os.environ.get("LADDER_DQPT_THREADS")
        if threads and threads.isdigit():
            manifest.jobs = min(manifest.jobs, max(1, int(threads)))
        if args.refine is not None:
            manifest.spec.refine = args.refine == "on"
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        with _thread_limit():
            artifacts = run(manifest)
    except TruncationAbort as err:
        print(f"numerical abort: {err}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG

    for name, path in artifacts.items():
        print(f"{name}: {path}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
