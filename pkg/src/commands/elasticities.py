"""``elasticities``: demand elasticities with delta-method standard errors, and emission elasticities."""

from __future__ import annotations

import argparse
import logging
from pathlib import Path

from src.clients.files import OutputWriter, read_document
from src.commands import add_output_arguments, add_params_argument, parameter_client, parameter_path, run_config
from src.config import settings
from src.errors import EXIT_OK, ConfigError, InvalidArgumentError, ParameterFileError
from src.models.aids import AidsFit
from src.models.elasticity import elasticity_table
from src.models.emissions import emission_elasticities, emission_weights, fleet_activity
from src.models.panel import load_panel
from src.schemas import EvaluationPoint, FitDocument

logger = logging.getLogger(__name__)


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("elasticities", help="elasticity tables from a fit document")
    parser.add_argument("--fit", required=True, type=Path, help="fit.json written by estimate")
    parser.add_argument("--at", default="means", help="'means' or a JSON point file with shares and log_prices")
    parser.add_argument("--emissions", action="store_true", help="also compute emission elasticities")
    add_params_argument(parser)
    parser.add_argument("--panel", default=None, help="panel whose fleet km weight the emission elasticities")
    parser.add_argument("--weighting", choices=["km", "fuel"], default=settings.emission_weighting)
    add_output_arguments(parser)
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    config = run_config(args)
    if not args.fit.is_file():
        raise ConfigError(f"fit document not found: {args.fit}")
    fit = AidsFit.from_document(read_document(args.fit, FitDocument))
    at = None if args.at == "means" else read_document(Path(args.at), EvaluationPoint)
    table = elasticity_table(fit, at)
    logger.info("own-price elasticities: %s", table.own_price.round(3).to_dict())

    emission_table = None
    if args.emissions:
        path = parameter_path(config.params)
        if not path.is_file():
            raise ParameterFileError("fleet parameters needed for emission elasticities; file not found", path=str(path))
        client, explicit = parameter_client(config.params)
        fleet = client.load_parameters(explicit).fleet
        panel = load_panel(config.panel) if config.panel else None
        activity = fleet_activity(fleet, panel, args.weighting)
        missing = [c for c in fit.classes if c not in activity.index]
        if missing:
            raise InvalidArgumentError(f"no fleet activity for fitted class(es): {', '.join(missing)}")
        weights = emission_weights(fleet, activity.reindex(list(fit.classes)))
        emission_table = emission_elasticities(table, weights, fit.fuels or fleet.fuels)

    with OutputWriter(config.output_dir) as out:
        if config.output_format == "json":
            out.write_document("elasticities.json", table.to_document())
        else:
            out.write_table("elasticities.csv", table.to_frame(), round_values=False)
        if emission_table is not None:
            out.write_table("emission_elasticities.csv", emission_table.to_frame(), round_values=False)
    return EXIT_OK
