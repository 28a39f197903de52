"""``scenario run`` and ``scenario reproduce``."""

from __future__ import annotations

import argparse
from pathlib import Path

from src.clients.files import OutputWriter
from src.commands import add_output_arguments, add_params_argument, parameter_client, run_config
from src.config import settings
from src.errors import EXIT_OK, InvalidArgumentError, ReproductionMismatchError
from src.models.scenario import (
    AggregationRule,
    ScenarioInputs,
    comparison_frame,
    reports_frame,
    reports_long,
    reproduce_published,
    run_all,
)
from src.schemas import ReportBundle


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("scenario", help="fuel-price shock scenarios")
    commands = parser.add_subparsers(dest="scenario_command", required=True)

    run_parser = commands.add_parser("run", help="run scenarios through the impact chain")
    add_params_argument(run_parser)
    run_parser.add_argument("--scenarios", "--config", dest="scenarios", type=Path, default=None, help="scenario file")
    run_parser.add_argument("--elasticities", type=Path, default=None, help="emission elasticity table (CSV)")
    _add_common(run_parser)
    run_parser.set_defaults(handler=run)

    reproduce_parser = commands.add_parser("reproduce", help="compare shipped scenarios with published values")
    reproduce_parser.add_argument(
        "--params", type=Path, default=None, help=f"reference parameter directory (default {settings.parameter_dir})"
    )
    _add_common(reproduce_parser)
    reproduce_parser.set_defaults(handler=reproduce)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--rule", choices=[r.value for r in AggregationRule], default=settings.aggregation_rule)
    parser.add_argument("--only", default=None, help="comma-separated scenario ids")
    parser.add_argument("--plot-data", action="store_true", help="also write a long-format table for plotting")
    add_output_arguments(parser)


def _selected(only: str | None) -> list[str] | None:
    if not only:
        return None
    return [s.strip() for s in only.split(",") if s.strip()]


def _write_reports(out: OutputWriter, reports: list, output_format: str, plot_data: bool) -> None:
    if output_format == "json":
        out.write_document("report.json", ReportBundle(reports=[r.to_document() for r in reports]))
    else:
        out.write_table("report.csv", reports_frame(reports))
    if plot_data:
        out.write_table("plot_data.csv", reports_long(reports), round_values=False)


def run(args: argparse.Namespace) -> int:
    config = run_config(args)
    client, explicit = parameter_client(config.params)
    params = client.load_parameters(explicit)
    scenarios = client.load_scenarios(config.scenarios).scenarios
    wanted = _selected(args.only)
    if wanted is not None:
        unknown = sorted(set(wanted) - {s.id for s in scenarios})
        if unknown:
            raise InvalidArgumentError(f"unknown scenario id(s): {', '.join(unknown)}")
        scenarios = [s for s in scenarios if s.id in wanted]
    inputs = ScenarioInputs(
        elasticities=client.load_emission_elasticities(args.elasticities),
        params=params,
        rule=AggregationRule(args.rule),
    )
    reports = run_all(scenarios, inputs)
    with OutputWriter(config.output_dir) as out:
        _write_reports(out, reports, config.output_format, args.plot_data)
    return EXIT_OK


def reproduce(args: argparse.Namespace) -> int:
    config = run_config(args)
    result = reproduce_published(config.params, _selected(args.only), args.rule)
    with OutputWriter(config.output_dir) as out:
        _write_reports(out, result.reports, config.output_format, args.plot_data)
        if config.output_format == "json":
            out.write_document("comparison.json", result.to_document())
        else:
            out.write_table("comparison.csv", comparison_frame(result.cells), round_values=False)

    summary = f"{len(result.cells) - len(result.failed)}/{len(result.cells)} cells within tolerance"
    print(summary)
    for cell in result.failed:
        print(
            f"FAIL {cell.scenario} {cell.pollutant} {cell.metric}: "
            f"computed {cell.computed:.4f}, published {cell.published:.4f}, allowed +/-{cell.tolerance:.4f}"
        )
    if not result.passed:
        raise ReproductionMismatchError(summary, failed_cells=len(result.failed))
    return EXIT_OK
