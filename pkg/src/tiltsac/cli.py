"""Command-line front end.

Subcommands::

    tiltsac run      simulate one controller, write its trace and metrics
    tiltsac compare  simulate all three controllers, write comparison tables
    tiltsac check    run the quick invariant suite

Exit codes: 0 success, 1 configuration error, 2 numerical failure (attitude
singularity, divergence or a failed invariant), 3 I/O error.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from . import __version__
from .config import ConfigError, load_default_scenario, load_scenario
from .report import CONTROLLERS, TraceIOError, compute_metrics, emit_tables, emit_trace, write_text
from .simkernel import SimulationError, ZeroDisturbance, burst_disturbance, run

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3

log = logging.getLogger("tiltsac")


def build_parser():
    parser = argparse.ArgumentParser(prog="tiltsac", description="Tiltrotor transition attitude-control simulator.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def scenario_args(p):
        p.add_argument("--config", help="YAML scenario file (default: the shipped nominal scenario)")
        p.add_argument("--out", default="out", help="output directory (default: %(default)s)")
        p.add_argument("--disturbance", choices=("on", "off"), help="override the configured disturbance")
        p.add_argument("--step", type=float, help="integration step in s")

    p_run = sub.add_parser("run", help="simulate one controller")
    scenario_args(p_run)
    p_run.add_argument("--controller", choices=CONTROLLERS, help="override the configured controller")

    p_cmp = sub.add_parser("compare", help="simulate FTSMC, RSMC and SAC on one scenario")
    scenario_args(p_cmp)
    p_cmp.add_argument("--jobs", type=int, default=1, help="parallel worker processes (default: %(default)s)")

    p_chk = sub.add_parser("check", help="run the invariant suite")
    p_chk.add_argument("--slow", action="store_true", help="include the 24 s momentum-conservation check")
    return parser


def _scenario(args):
    config = load_scenario(args.config) if args.config else load_default_scenario()
    changes = {}
    if args.disturbance == "on":
        changes["disturbance"] = burst_disturbance()
    elif args.disturbance == "off":
        changes["disturbance"] = ZeroDisturbance()
    if args.step is not None:
        changes["step"] = args.step
    if changes:
        try:
            config = dataclasses.replace(config, **changes)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    return config


def _ensure_dir(path):
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as exc:
        raise TraceIOError(f"cannot create {path}: {exc.strerror or exc}") from exc


def _simulate(config, kind):
    return run(config, kind)


def cmd_run(args):
    config = _scenario(args)
    kind = args.controller or config.controller.kind
    log.info("running %s for %g s at step %g s", kind, config.duration, config.step)
    trace = run(config, kind)
    _ensure_dir(args.out)
    emit_trace(trace, os.path.join(args.out, f"trace_{kind}.csv"))
    report = compute_metrics(trace, config.windows)
    lines = [f"{kind}: tracking errors in deg"]
    for phase in ("conversion", "reconversion", "full"):
        for axis, (mx, rms) in report.metrics[kind][phase].items():
            lines.append(f"  {phase:<13}{axis:<6}MAX_e {mx:.6f}  RMS_e {rms:.6f}")
    text = "\n".join(lines) + "\n"
    write_text(os.path.join(args.out, f"metrics_{kind}.txt"), text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_compare(args):
    config = _scenario(args)
    _ensure_dir(args.out)
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            futures = {kind: pool.submit(_simulate, config, kind) for kind in CONTROLLERS}
            traces = {kind: fut.result() for kind, fut in futures.items()}
    else:
        traces = {kind: run(config, kind) for kind in CONTROLLERS}
    report = None
    for kind in CONTROLLERS:
        emit_trace(traces[kind], os.path.join(args.out, f"trace_{kind}.csv"))
        single = compute_metrics(traces[kind], config.windows)
        report = single if report is None else report.merge(single)
    label = "with disturbance" if config.disturbance.bound() > 0.0 else "without disturbance"
    text = emit_tables({label: report})
    write_text(os.path.join(args.out, "tables.txt"), text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_check(args):
    from .checks import run_checks

    results = run_checks(include_slow=args.slow)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name:<14}{r.detail}")
    return EXIT_OK if all(r.passed for r in results) else EXIT_NUMERIC


COMMANDS = {"run": cmd_run, "compare": cmd_compare, "check": cmd_check}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SimulationError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
