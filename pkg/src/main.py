"""fuelshock: fuel demand, emission elasticities and health-loss scenarios from the command line."""

from __future__ import annotations

import argparse
import logging
import sys

from src.commands import elasticities, estimate, scenario, simulate, validate
from src.config import settings
from src.errors import EXIT_UNEXPECTED, FuelShockError
from src.log import configure_logging

logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=settings.service_name,
        description="Fuel demand estimation and fuel-price shock health-loss scenarios",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {settings.version}")
    parser.add_argument(
        "--log-level",
        default=settings.log_level,
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        type=str.upper,
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    for group in (estimate, elasticities, scenario, validate, simulate):
        group.register(subparsers)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    configure_logging(args.log_level)
    try:
        return args.handler(args)
    except FuelShockError as exc:
        logger.error("%s", exc.detail)
        return exc.exit_code
    except Exception:
        logger.exception("unexpected error")
        return EXIT_UNEXPECTED


if __name__ == "__main__":
    sys.exit(main())
