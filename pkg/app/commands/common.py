"""Shared command plumbing: common flags, config loading and CSV artifacts."""
from pathlib import Path
from typing import List, Optional, Sequence
import argparse
import logging

import pandas as pd

from app.config import get_settings
from app.core.errors import ConfigurationError
from app.core.models.template import ModelKind, TemplateSpec
from app.core.schemas.experiment import ExperimentFile, load_experiment
from app.core.services.snapshots import write_atomic

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_SNAPSHOT_VERSION = 4
EXIT_SNAPSHOT_CORRUPT = 5


def run_options() -> argparse.ArgumentParser:
    """Parent parser with the flags every experiment verb accepts."""
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument("--config", required=True, help="Experiment YAML file")
    parser.add_argument("--seed", type=int, default=None, help="Override the root seed of the file")
    parser.add_argument("--jobs", type=int, default=None,
                        help="Repetitions run in parallel (default from settings)")
    parser.add_argument("--out-dir", default=None, help="Override output.directory of the file")
    parser.add_argument("--format", choices=["csv"], default="csv", help="Artifact format")
    return parser


def template_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--widgets", type=int_list, default=None,
                        help="Content alternatives per widget, e.g. 2,3,2,2,2")
    parser.add_argument("--context", dest="context_sizes", type=int_list, default=[],
                        help="Values per context dimension, e.g. 4")


def int_list(text: str) -> List[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def float_list(text: str) -> List[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def model_kind(text: str) -> ModelKind:
    for kind in ModelKind:
        if kind.value.lower() == text.lower():
            return kind
    raise ConfigurationError(
        f"unknown model {text!r}; choose from {', '.join(k.value for k in ModelKind)}")


def load_config(args: argparse.Namespace) -> ExperimentFile:
    return load_experiment(args.config)


def template_from(args: argparse.Namespace) -> TemplateSpec:
    """Template from --widgets/--context, or from the template section of --config."""
    if getattr(args, "widgets", None):
        return TemplateSpec(widgets=args.widgets, context=args.context_sizes)
    if getattr(args, "config", None):
        return load_experiment(args.config).spec()
    raise ConfigurationError("Give the template with --widgets or --config")


def output_dir(args: argparse.Namespace, experiment: Optional[ExperimentFile] = None) -> Path:
    if getattr(args, "out_dir", None):
        return Path(args.out_dir)
    if experiment is not None:
        return Path(experiment.output.directory)
    return Path(".")


def jobs(args: argparse.Namespace) -> int:
    value = args.jobs if getattr(args, "jobs", None) is not None else get_settings().DEFAULT_JOBS
    if value < 1:
        raise ConfigurationError(f"--jobs must be at least 1, got {value}")
    return value


def write_csv(frame: pd.DataFrame, path: Path) -> Path:
    """CSV with a schema-version comment line, written atomically."""
    header = f"# schema_version={get_settings().CSV_SCHEMA_VERSION}\n"
    write_atomic(path, header + frame.to_csv(index=False, lineterminator="\n"))
    logger.info(f"Wrote {len(frame)} rows to {path}")
    return path


def print_table(frame: pd.DataFrame, columns: Sequence[str]) -> None:
    print(frame[list(columns)].to_string(index=False))
