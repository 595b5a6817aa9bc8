"""Command-line front end: ``sqvdp run|list-scenarios|validate``."""
from __future__ import annotations

import argparse
import sys

from . import config
from .config import ConfigError
from .runner import OUT_ENV, run_sweep_parallel

EXIT_OK, EXIT_CONFIG, EXIT_PARTIAL = 0, 1, 2


def _mode(value: str):
    if value == "sym":
        return value
    if value in ("1", "2"):
        return int(value)
    raise argparse.ArgumentTypeError("mode must be 1, 2 or sym")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="sqvdp",
        description=f"Run simulation scenarios. Output base directory can be set with ${OUT_ENV}.",
    )
    sub = p.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a scenario file or bundled scenario name")
    run.add_argument("scenario")
    run.add_argument("--out", help="output directory (overrides $%s)" % OUT_ENV)
    run.add_argument("--workers", type=int, default=1)
    run.add_argument("--plot", action="store_true", help="also write SVG previews")
    run.add_argument("--truncation", type=int, help="Fock levels per oscillator")
    run.add_argument("--mode", type=_mode, help="spectrum mode: 1, 2 or sym")
    sub.add_parser("list-scenarios", help="list bundled scenarios")
    val = sub.add_parser("validate", help="parse and check a scenario without running it")
    val.add_argument("scenario")
    return p


def _load(name):
    scenario = config.load(config.resolve(name))
    scenario.points()  # surfaces sweep-value errors
    return scenario


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list-scenarios":
        for name, path in config.bundled_scenarios().items():
            sc = config.load(path)
            print(f"{name}\t{sc.kind.value}")
        return EXIT_OK
    try:
        scenario = _load(args.scenario)
        if args.command == "validate":
            print(f"ok: {scenario.name} ({scenario.kind.value}, {len(scenario.points())} point(s))")
            return EXIT_OK
        if args.workers < 1:
            raise ConfigError("--workers", "must be >= 1")
        scenario = scenario.with_overrides(args.truncation, args.mode)
        if args.plot:
            from dataclasses import replace

            scenario = replace(scenario, output=replace(scenario.output, plot=True))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        manifest = run_sweep_parallel(scenario, args.workers, args.out)
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for f in manifest.failures:
        print(f"point {f['value']} failed: {f['error']}", file=sys.stderr)
    print(f"{scenario.name}: {len(manifest.outputs)} file(s) in {manifest.path.parent}")
    return manifest.exit_code


if __name__ == "__main__":
    sys.exit(main())
