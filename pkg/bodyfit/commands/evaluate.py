from __future__ import annotations

import dataclasses
from collections.abc import Callable
from pathlib import Path
from typing import Any

import click

from .. import constants
from ..evaluation import (
    GENDER_HEADER,
    HEIGHT_HEADER,
    HEIGHT_SUMMARY_HEADER,
    RETRIEVAL_HEADER,
    evaluate_gender,
    evaluate_height,
    evaluate_icp,
    evaluate_retrieval,
    summarize_height,
)
from ..geometry.io import read_depth_frame, read_skeleton
from ..synth import load_demographic_table, load_model
from ..utils import write_csv
from . import (
    cli,
    emit_csv,
    in_file,
    make_tolerances,
    out_file,
    seed_option,
    tolerance_options,
    workers_option,
)


def population_options(func: Callable[..., Any]) -> Callable[..., Any]:
    func = click.option(
        "--demographics", type=in_file, default=None, help="Demographic table JSON."
    )(func)
    return click.option(
        "--sd-scale",
        type=click.FloatRange(min=0, min_open=True),
        default=None,
        help="Multiplier on both table spreads.",
    )(func)


def output_option(func: Callable[..., Any]) -> Callable[..., Any]:
    return click.option(
        "-o", "--out", type=out_file, default=None, help="CSV file (standard output otherwise)."
    )(func)


@cli.group("eval")
def evaluate() -> None:
    """Evaluation harnesses over generated bodies."""


@evaluate.command("height")
@click.option("--count", type=click.IntRange(min=1), default=50, show_default=True)
@click.option(
    "--noise-sd",
    "noise_levels",
    type=click.FloatRange(min=0),
    multiple=True,
    default=(0.0, 5.0),
    show_default=True,
    help="Depth noise in mm; repeat for several levels.",
)
@click.option("--summary", type=out_file, default=None, help="Per-bin summary CSV.")
@output_option
@population_options
@seed_option
@workers_option
@tolerance_options
def height(
    count: int,
    noise_levels: tuple[float, ...],
    summary: Path | None,
    out: Path | None,
    sd_scale: float | None,
    demographics: Path | None,
    seed: int,
    workers: int | None,
    eps: float,
    literal_verticality: bool,
) -> None:
    """Height error of rendered bodies against their generated stature."""
    rows = evaluate_height(
        count,
        seed,
        noise_levels,
        sd_scale=sd_scale,
        table=load_demographic_table(demographics),
        tol=make_tolerances(eps, literal_verticality),
        workers=workers,
    )
    emit_csv(out, HEIGHT_HEADER, (dataclasses.astuple(row) for row in rows))
    summary_rows = summarize_height(rows)
    if summary is not None:
        write_csv(summary, HEIGHT_SUMMARY_HEADER, summary_rows)
    if out is not None:
        emit_csv(None, HEIGHT_SUMMARY_HEADER, summary_rows)


@evaluate.command("icp")
@click.option("--source", type=in_file, required=True, help="Depth PGM of the scan.")
@click.option("--skeleton", type=in_file, required=True, help="Skeleton JSON of the scan.")
@click.option("--intrinsics", type=in_file, default=None, help="Intrinsics JSON.")
@click.option(
    "--target",
    type=click.Path(file_okay=False, path_type=Path),
    required=True,
    help="Model bundle to register onto.",
)
@click.option(
    "--iters",
    type=click.IntRange(min=1),
    default=constants.ICP_MAX_ITERATIONS,
    show_default=True,
)
@click.option(
    "--samples",
    type=click.IntRange(min=1),
    default=constants.ICP_TARGET_SAMPLES,
    show_default=True,
)
@output_option
@seed_option
def icp(
    source: Path,
    skeleton: Path,
    intrinsics: Path | None,
    target: Path,
    iters: int,
    samples: int,
    out: Path | None,
    seed: int,
) -> None:
    """Mean alignment error per ICP iteration."""
    report = evaluate_icp(
        read_depth_frame(source, intrinsics),
        read_skeleton(skeleton),
        load_model(target),
        iters,
        samples=samples,
        seed=seed,
    )
    emit_csv(out, ("iteration", "error_m"), enumerate(report.errors))
    if out is not None:
        click.echo(
            f"{report.iterations} iterations, error {report.errors[0]:.4f} m"
            f" -> {report.errors[-1]:.4f} m"
        )


@evaluate.command("gender")
@click.option("--pairs", type=click.IntRange(min=2), default=50, show_default=True)
@click.option(
    "--noise-sd", type=click.FloatRange(min=0), default=0.0, help="Depth noise in mm."
)
@output_option
@population_options
@seed_option
@workers_option
def gender(
    pairs: int,
    noise_sd: float,
    out: Path | None,
    sd_scale: float | None,
    demographics: Path | None,
    seed: int,
    workers: int | None,
) -> None:
    """Held-out accuracy of the geodesic-ratio gender classifier on male/female pairs."""
    result = evaluate_gender(
        pairs,
        seed,
        noise_sd=noise_sd,
        sd_scale=sd_scale,
        table=load_demographic_table(demographics),
        workers=workers,
    )
    emit_csv(out, GENDER_HEADER, (dataclasses.astuple(row) for row in result.rows))
    click.echo(f"Classifier {result.classifier}: accuracy {result.accuracy:.3f}", err=out is None)


@evaluate.command("retrieval")
@click.option("--count", type=click.IntRange(min=1), default=50, show_default=True)
@click.option("--trials", type=click.IntRange(min=0), default=20, show_default=True)
@click.option(
    "--noise-sd",
    type=click.FloatRange(min=0),
    default=5.0,
    show_default=True,
    help="Depth noise of the re-rendered queries, mm.",
)
@click.option("-k", type=click.IntRange(min=1), default=3, show_default=True)
@output_option
@population_options
@seed_option
@workers_option
def retrieval(
    count: int,
    trials: int,
    noise_sd: float,
    k: int,
    out: Path | None,
    sd_scale: float | None,
    demographics: Path | None,
    seed: int,
    workers: int | None,
) -> None:
    """Self retrieval and noisy top-K retrieval rates over an in-memory index."""
    result = evaluate_retrieval(
        count,
        trials,
        seed,
        noise_sd=noise_sd,
        k=k,
        sd_scale=sd_scale,
        table=load_demographic_table(demographics),
        workers=workers,
    )
    emit_csv(out, RETRIEVAL_HEADER, result.rows)
    click.echo(
        f"Self retrieval {result.self_rate:.3f}, noisy top-{k} {result.noisy_rate:.3f}",
        err=out is None,
    )
