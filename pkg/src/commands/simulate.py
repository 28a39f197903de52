"""``simulate``: write a synthetic panel generated from a restricted AIDS."""

from __future__ import annotations

import argparse
from pathlib import Path

from src.clients.files import OutputWriter
from src.commands import add_params_argument, parameter_client
from src.errors import EXIT_OK
from src.models.panel import PANEL_COLUMNS
from src.models.synthetic import simulate_panel


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("simulate", help="generate a synthetic panel")
    add_params_argument(parser)
    parser.add_argument("--provinces", type=int, default=31)
    parser.add_argument("--years", type=int, default=10)
    parser.add_argument("--start-year", type=int, default=2002)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--noise", type=float, default=0.005, help="standard deviation of share noise")
    parser.add_argument("--out", required=True, type=Path, help="panel CSV to write")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    client, explicit = parameter_client(args.params)
    fleet = client.load_parameters(explicit).fleet
    simulated = simulate_panel(
        fleet,
        provinces=args.provinces,
        years=args.years,
        start_year=args.start_year,
        seed=args.seed,
        noise=args.noise,
    )
    with OutputWriter(args.out.parent) as out:
        out.write_table(args.out.name, simulated.panel.frame[PANEL_COLUMNS], round_values=False)
    print(f"wrote {len(simulated.panel)} rows to {args.out}")
    return EXIT_OK
