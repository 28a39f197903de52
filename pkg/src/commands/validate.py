"""``validate``: check input files against their schemas without running anything."""

from __future__ import annotations

import argparse
from pathlib import Path

from src.commands import parameter_client
from src.errors import EXIT_OK
from src.models.panel import derive_activity, load_panel


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("validate", help="validate panel, parameter, scenario and elasticity files")
    parser.add_argument("--panel", type=Path, default=None)
    parser.add_argument("--params", type=Path, default=None, help="parameter file or directory")
    parser.add_argument("--scenarios", type=Path, default=None)
    parser.add_argument("--elasticities", type=Path, default=None)
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    client, explicit = parameter_client(args.params)
    params = client.load_parameters(explicit)
    print(f"ok  parameters {params.version}: {len(params.fleet.classes)} classes, {len(params.pollutants)} pollutants")

    scenarios = client.load_scenarios(args.scenarios)
    print(f"ok  scenarios: {', '.join(s.id for s in scenarios.scenarios)}")

    table = client.load_emission_elasticities(args.elasticities)
    print(f"ok  emission elasticities: {len(table.classes)} classes x {len(table.pollutants)} pollutants")

    if args.panel is not None:
        panel = derive_activity(load_panel(args.panel), params.fleet)
        print(f"ok  panel: {len(panel)} rows, {panel.n_groups} groups, {len(panel.classes)} classes")
    return EXIT_OK
