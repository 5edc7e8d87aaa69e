from __future__ import annotations

import logging
from pathlib import Path

import click

from ..synth import generate_dataset, load_demographic_table
from . import cli, in_file, seed_option, workers_option

log = logging.getLogger(__name__)


@cli.group()
def synth() -> None:
    """Synthetic body generation."""


@synth.command("gen")
@click.option("--count", type=click.IntRange(min=1), required=True, help="Bodies to generate.")
@click.option(
    "--out",
    type=click.Path(file_okay=False, path_type=Path),
    required=True,
    help="Dataset directory.",
)
@click.option(
    "--sd-scale",
    type=click.FloatRange(min=0, min_open=True),
    default=None,
    help="Multiplier on both table spreads (separate height/weight defaults otherwise).",
)
@click.option("--demographics", type=in_file, default=None, help="Demographic table JSON.")
@seed_option
@workers_option
def generate(
    count: int,
    out: Path,
    sd_scale: float | None,
    demographics: Path | None,
    seed: int,
    workers: int | None,
) -> None:
    """Generate COUNT model bundles under OUT."""
    table = load_demographic_table(demographics)
    paths = generate_dataset(out, count, seed, sd_scale, workers=workers, table=table)
    click.echo(f"Generated {len(paths)} bodies in {out}")
