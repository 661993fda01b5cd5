from __future__ import annotations

import argparse
import logging
from pathlib import Path
import sys

from .config import RunConfig
from .errors import NumericalError
from .pipeline import run_build, run_fault, run_spectral, run_sweep

_COMMANDS = {
    "build": run_build,
    "fault": run_fault,
    "spectral": run_spectral,
    "sweep": run_sweep,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="inertiaforge",
        description="Frequency-disturbance propagation, RoCoF and inertia placement on transmission grids.",
    )
    parser.add_argument("command", choices=sorted(_COMMANDS), help="Pipeline to run")
    parser.add_argument("--config", type=Path, default=None, help="Path to inertiaforge.json config")
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="SECTION.KEY=VALUE",
        help="Override one config value (JSON literal or plain string); repeatable",
    )
    parser.add_argument("--output", type=Path, default=None, help="Output directory (overrides output.directory)")
    parser.add_argument("--verbose", action="store_true", help="Enable debug logging")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s [%(levelname)s] %(message)s",
    )

    project_root = Path.cwd()
    try:
        if args.config is not None:
            config = RunConfig.from_json(args.config)
        else:
            config = RunConfig.load_default(project_root)
        if args.overrides:
            config = config.with_overrides(args.overrides)
        output_dir = args.output or Path(config.output.directory)
        if args.output is not None:
            config = config.with_overrides([f"output.directory={args.output}"])

        result = _COMMANDS[args.command](config, output_dir, project_root)
        if args.command == "build":
            print(result["report"])
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (NumericalError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
