"""``estimate``: fit the AIDS system or the per-class double-log model to a panel."""

from __future__ import annotations

import argparse
import logging

import pandas as pd

from src.clients.files import OutputWriter
from src.commands import add_output_arguments, add_params_argument, estimator_options, parameter_client, run_config
from src.config import settings
from src.errors import EXIT_OK
from src.models.aids import fit_aids
from src.models.double_log import fit_double_log
from src.models.panel import derive_activity, load_panel

logger = logging.getLogger(__name__)


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("estimate", help="estimate fuel demand from a panel file")
    parser.add_argument("--panel", required=True, help="panel CSV (province, year, class, price, vehicle_population, vmt)")
    add_params_argument(parser)
    parser.add_argument("--model", choices=["aids", "double-log"], default="aids")
    parser.add_argument("--index", choices=["translog", "stone"], default=settings.price_index)
    parser.add_argument("--tol", type=float, default=settings.tolerance)
    parser.add_argument("--max-iter", type=int, default=settings.max_iter)
    parser.add_argument("--dropped-equation", default=None, help="class whose share equation is dropped")
    parser.add_argument("--group-prices", action="store_true", help="estimate on price groups of classes")
    add_output_arguments(parser)
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    options = estimator_options(args)
    config = run_config(args, options)
    client, explicit = parameter_client(config.params)
    params = client.load_parameters(explicit)
    panel = derive_activity(load_panel(config.panel), params.fleet)

    with OutputWriter(config.output_dir) as out:
        if args.model == "double-log":
            fit = fit_double_log(panel)
            document = fit.to_document()
            if config.output_format == "json":
                out.write_document("double_log.json", document)
            else:
                frame = pd.DataFrame([row.model_dump() for row in document.rows])
                out.write_table("double_log.csv", frame, round_values=False)
            return EXIT_OK

        fit = fit_aids(panel, config.estimator)
        out.write_document("fit.json", fit.to_document())
        residuals = pd.DataFrame(
            sorted(fit.restriction_residuals().items()), columns=["restriction", "max_abs_residual"]
        )
        out.write_table("restriction_residuals.csv", residuals, round_values=False)
        out.write_text("convergence.log", "\n".join(fit.log) + "\n")
    logger.info("estimated %d classes on %d observations", len(fit.classes), fit.n_obs)
    return EXIT_OK
