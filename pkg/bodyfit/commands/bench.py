from __future__ import annotations

from pathlib import Path

import click

from ..evaluation import BENCH_HEADER, bench_query
from ..utils import parse_counts
from . import cli, emit_csv, out_file, seed_option


@cli.group()
def bench() -> None:
    """Timing harnesses."""


@bench.command("query")
@click.option(
    "--sizes",
    default="1e3,1e4,1e5",
    show_default=True,
    help=(
        "Comma-separated index sizes, plain or like 5e4. The default keeps memory small;"
        " pass 5e4,5e6 to time the latency targets (5e6 vectors take about 10 GB)."
    ),
)
@click.option("--queries", type=click.IntRange(min=1), default=5, show_default=True)
@click.option("--threads", type=click.IntRange(min=1), default=1, show_default=True)
@click.option("-o", "--out", type=out_file, default=None, help="CSV file.")
@seed_option
def query(sizes: str, queries: int, threads: int, out: Path | None, seed: int) -> None:
    """Build and query indexes of random vectors at each size."""
    try:
        counts = parse_counts(sizes)
    except ValueError as exc:
        raise click.BadParameter(str(exc), param_hint="--sizes") from None
    if not counts:
        raise click.BadParameter("no sizes given", param_hint="--sizes")
    emit_csv(out, BENCH_HEADER, bench_query(counts, seed, queries=queries, threads=threads))
