from __future__ import annotations

from pathlib import Path

import click

from ..anthropometrics import Measurements
from ..errors import FormatError
from ..sizing import load_size_chart, predict_size
from ..utils import read_json
from . import cli, in_file


@cli.command()
@click.option("--measurements", type=in_file, required=True, help="Measurements JSON.")
@click.option("--chart", type=in_file, default=None, help="Size chart JSON.")
@click.option("--no-height", is_flag=True, help="Ignore the chart's height ranges.")
def size(measurements: Path, chart: Path | None, no_height: bool) -> None:
    """Print the T-shirt size label for a measurements file."""
    data = read_json(measurements)
    if not isinstance(data, dict):
        raise FormatError(f"{measurements}: measurements must be a JSON object")
    label = predict_size(
        Measurements.from_dict(data), load_size_chart(chart), use_height=not no_height
    )
    click.echo(label)
