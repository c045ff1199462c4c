"""Experiment runner: sigcode <command> [--config PATH] [--seed N] [--out PATH] [--format csv|json] [key=value ...]"""

import argparse
import csv
import io
import json
import logging
import math
import platform
import sys
import time
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import scipy

from . import __version__, config
from .errors import ConfigError, SigcodeError
from .experiments import Table, build_table
from .worker import get_memory_status

logger = logging.getLogger(__name__)

# explicit flags, highest precedence
_FLAG_FIELDS = ("seed", "output_path", "output_format", "K", "n", "epsilon", "nu", "gamma_db", "mc_draws", "trials", "mode")


def _plain(value: Any) -> Any:
    """Builtin scalar for numpy values; NaN becomes None."""
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return None if math.isnan(value) else value
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    return value


def render(table: Table, output_format: str) -> str:
    """CSV (header row, repr floats, empty cell for None) or JSON text."""
    if output_format == "json":
        if table.single:
            document: Any = _plain(table.summary)
        else:
            document = {"columns": table.columns, "rows": [_plain(r) for r in table.records()]}
            if table.summary is not None:
                document["summary"] = _plain(table.summary)
        return json.dumps(document, indent=2) + "\n"

    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(table.columns)
    for row in table.rows:
        writer.writerow(["" if v is None else v for v in _plain(list(row))])
    return buffer.getvalue()


def write_manifest(path: Path, resolved: config.ExperimentConfig, wall_time: float) -> Path:
    manifest_path = path.with_name(path.name + ".manifest.json")
    manifest = {
        "config": _plain(resolved.to_dict()),
        "seed": resolved.seed,
        "versions": {
            "sigcode": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
        "wall_time_s": round(wall_time, 3),
        "memory": get_memory_status(),
    }
    manifest_path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return manifest_path


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", dest="config_path", help="TOML experiment configuration")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", dest="output_path", help="data file; a .manifest.json sidecar is written next to it")
    common.add_argument("--format", dest="output_format", choices=config.OUTPUT_FORMATS)
    common.add_argument("--log-level", default=None, help="overrides LOG_LEVEL")
    common.add_argument("--K", type=int)
    common.add_argument("--n", type=int)
    common.add_argument("--epsilon", type=float)
    common.add_argument("--nu", type=float)
    common.add_argument("--gamma-db", dest="gamma_db", type=float)
    common.add_argument("--mc-draws", dest="mc_draws", type=int)
    common.add_argument("--trials", type=int)
    common.add_argument("--mode", choices=config.RATE_MODES)
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(prog="sigcode", description="Randomized signature code experiments")
    commands = parser.add_subparsers(dest="command", required=True)

    smg = commands.add_parser("smg", parents=[common], help="sum multiplexing gain")
    smg.add_argument("--two-user-optimum", action="store_true")
    smg.add_argument("--masking-only-optimum", action="store_true")
    subparsers = [smg]
    subparsers.append(commands.add_parser("rate", parents=[common], help="rate lower bound over an SNR range"))
    subparsers.append(commands.add_parser("design", parents=[common], help="Rayleigh-fading parameter search"))
    subparsers.append(commands.add_parser("infer", parents=[common], help="user count and gain inference roundtrips"))
    subparsers.append(commands.add_parser("optimality", parents=[common], help="masking-capacity comparisons"))
    figures = commands.add_parser("figures", parents=[common], help="figure data tables")
    figures.add_argument("figure", choices=config.FIGURES + tuple(config.FIGURE_ALIASES))
    subparsers.append(figures)
    for sub in subparsers:
        sub.add_argument("overrides", nargs="*", metavar="key=value")
    return parser


def resolve(args: argparse.Namespace) -> config.ExperimentConfig:
    """defaults < config file < key=value overrides < explicit flags"""
    overrides: Dict[str, Any] = config.parse_overrides(args.overrides)
    overrides["command"] = args.command
    if getattr(args, "figure", None):
        overrides["figure"] = args.figure
    for flag in ("two_user_optimum", "masking_only_optimum"):
        if getattr(args, flag, False):
            overrides[flag] = True
    for name in _FLAG_FIELDS:
        value = getattr(args, name, None)
        if value is not None:
            overrides[name] = value
    return config.load_config(args.config_path, overrides)


def _error(kind: str, **details: Any) -> None:
    print(json.dumps({"error": kind, **details}), file=sys.stderr)


def run(resolved: config.ExperimentConfig) -> int:
    """Validate, build the table and write it (stdout when no output path is set)."""
    violations = config.validate(resolved)
    if violations:
        _error("validation", violations=violations)
        return 2

    started = time.perf_counter()
    try:
        table = build_table(resolved)
    except SigcodeError as e:
        logger.error(f"{resolved.command} failed: {e}")
        _error(type(e).__name__, message=str(e))
        return 1
    text = render(table, resolved.output_format)
    wall_time = time.perf_counter() - started

    if resolved.output_path is None:
        sys.stdout.write(text)
        return 0
    path = Path(resolved.output_path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as f:
        f.write(text)
    manifest_path = write_manifest(path, resolved, wall_time)
    logger.info(f"Wrote {len(table.rows)} row(s) to {path} (manifest {manifest_path.name}, {wall_time:.2f}s)")
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=(args.log_level or config.LOG_LEVEL).upper())
    try:
        resolved = resolve(args)
    except ConfigError as e:
        _error("validation", violations=[str(e)])
        return 2
    return run(resolved)


if __name__ == "__main__":
    sys.exit(main())
