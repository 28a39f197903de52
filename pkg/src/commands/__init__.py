"""Command groups of the ``fuelshock`` CLI; each module exposes ``register(subparsers)``."""

from __future__ import annotations

import argparse
from pathlib import Path

from pydantic import ValidationError

from src.clients.files import PARAMETER_FILE, ParameterClient
from src.config import settings
from src.errors import ConfigError
from src.schemas import EstimatorOptions, PriceIndex, RunConfig


def add_output_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--out", required=True, type=Path, help="output directory")
    parser.add_argument(
        "--format",
        choices=["csv", "json"],
        default=settings.output_format,
        help="delimited tables (csv) or structured documents (json)",
    )


def add_params_argument(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--params",
        type=Path,
        default=None,
        help=f"parameter file or directory (default: $FUELSHOCK_PARAMETER_DIR, {settings.parameter_dir})",
    )


def run_config(args: argparse.Namespace, estimator: EstimatorOptions | None = None) -> RunConfig:
    """Validate the paths and options of one invocation."""
    values = {
        "panel": getattr(args, "panel", None),
        "params": getattr(args, "params", None),
        "scenarios": getattr(args, "scenarios", None),
        "output_dir": getattr(args, "out", None),
        "output_format": getattr(args, "format", settings.output_format),
    }
    if estimator is not None:
        values["estimator"] = estimator
    try:
        return RunConfig(**values)
    except ValidationError as exc:
        error = exc.errors()[0]
        raise ConfigError(error["msg"].removeprefix("Value error, ")) from None


def estimator_options(args: argparse.Namespace) -> EstimatorOptions:
    try:
        return EstimatorOptions(
            index=PriceIndex(args.index),
            tol=args.tol,
            max_iter=args.max_iter,
            dropped_equation=args.dropped_equation,
            group_prices=args.group_prices,
            fgls_tol=settings.fgls_tolerance,
            fgls_max_iter=settings.fgls_max_iter,
        )
    except ValidationError as exc:
        error = exc.errors()[0]
        name = ".".join(str(p) for p in error["loc"])
        raise ConfigError(f"--{name.replace('_', '-')}: {error['msg']}") from None


def parameter_client(params: Path | None) -> tuple[ParameterClient, Path | None]:
    """Client for the parameter directory plus an explicit parameter file, if one was named."""
    if params is None:
        return ParameterClient(), None
    if params.is_dir():
        return ParameterClient(params), None
    return ParameterClient(params.parent), params


def parameter_path(params: Path | None) -> Path:
    client, explicit = parameter_client(params)
    return explicit or client.path(PARAMETER_FILE)
